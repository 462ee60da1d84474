#!/usr/bin/env python3
"""Convert an externally trained checkpoint into an .ftc container.

Inputs: a topology JSON and an .npz holding the weight/bias arrays it
references. This is the bridge for running the pipeline on real
checkpoints (e.g. a CIFAR-10 AlexNet exported from a training framework);
the library itself never trains anything.

Topology JSON schema:

    {
      "name": "alexnet-cifar10",
      "input_shape": [3, 32, 32],
      "class_count": 10,
      "format": {"kind": "float32"},            # or fixed32 + bit split
      "normalization": {"mean": [...], "std": [...]},   # optional
      "layers": [
        {"kind": "conv2d", "hyper": {"stride": [1,1], "padding": [2,2]},
         "weight": "conv1.weight", "bias": "conv1.bias"},
        {"kind": "relu", "hyper": {}},
        {"kind": "maxpool2d", "hyper": {"pool": [2,2], "stride": [2,2]}},
        {"kind": "flatten", "hyper": {}},
        {"kind": "fully-connected", "hyper": {}, "weight": "fc.weight", "bias": "fc.bias"}
      ]
    }

"weight"/"bias" name arrays inside the .npz (conv: OIHW, fc: out x in).

    python tools/export_npz.py topology.json arrays.npz model.ftc
"""

import argparse
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from faultclip.model import LayerSpec, Model, NumericFormat, ParamWords, encode_words, save_model


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("topology", help="topology JSON (schema in module docstring)")
    parser.add_argument("arrays", help=".npz with the referenced arrays")
    parser.add_argument("output", help=".ftc path to write")
    args = parser.parse_args()

    with open(args.topology, "r", encoding="utf-8") as fh:
        topo = json.load(fh)
    arrays = np.load(args.arrays)
    fmt = NumericFormat.from_json(topo.get("format", {"kind": "float32"}))

    layers = []
    params = {}
    for i, spec in enumerate(topo["layers"]):
        layers.append(LayerSpec(spec["kind"], dict(spec.get("hyper", {}))))
        if "weight" in spec:
            w = np.asarray(arrays[spec["weight"]], dtype=np.float32)
            b = np.asarray(arrays[spec["bias"]], dtype=np.float32)
            params[i] = {
                "weight": ParamWords(encode_words(w, fmt), w.shape),
                "bias": ParamWords(encode_words(b, fmt), b.shape),
            }

    model = Model(
        name=topo["name"],
        input_shape=tuple(topo["input_shape"]),
        class_count=int(topo["class_count"]),
        layers=tuple(layers),
        params=params,
        fmt=fmt,
        normalization=topo.get("normalization"),
    )
    save_model(model, args.output)
    print(f"wrote {args.output} ({model.total_bits()} parameter bits)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
