#!/usr/bin/env python3
"""Train the committed LeNet-style test fixture and export it to .ftc.

Run once from the repo root; the resulting container is committed at
tests/fixtures/lenet-fixture.ftc so the test suite never trains anything.
Requires torch (a dev-only dependency, not needed by the library).

    python tools/make_fixture.py
"""

import os
import sys

import numpy as np
import torch
import torch.nn as nn

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from faultclip.data import batch_images, labels_of, make_synthetic_set
from faultclip.metrics import evaluate_accuracy
from faultclip.model import (
    LayerSpec,
    Model,
    NumericFormat,
    ParamWords,
    encode_words,
    forward,
    save_model,
)

# Q3.28 keeps corrupted weight magnitudes on the activation scale, the
# regime where clip-threshold choice matters; see README.


OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures", "lenet-fixture.ftc")

FIXTURE_FMT = NumericFormat("fixed32", 7, 24)

TRAIN_SEED = 7
VAL_SEED = 8
N_TRAIN = 4096
N_VAL = 1024
EPOCHS = 6
BATCH = 64


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 4, 5)
        self.conv2 = nn.Conv2d(4, 8, 5)
        self.fc1 = nn.Linear(8 * 4 * 4, 32)
        self.fc2 = nn.Linear(32, 10)
        self.pool = nn.MaxPool2d(2, 2)

    def forward(self, x):
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.pool(torch.relu(self.conv2(x)))
        x = torch.flatten(x, 1)
        x = torch.relu(self.fc1(x))
        return self.fc2(x)


def export(net: Net) -> Model:
    sd = {k: v.detach().numpy().astype(np.float32) for k, v in net.state_dict().items()}

    def pw(arr):
        return ParamWords(encode_words(arr, FIXTURE_FMT), arr.shape)

    layers = (
        LayerSpec("conv2d", {"stride": [1, 1], "padding": [0, 0]}),
        LayerSpec("relu", {}),
        LayerSpec("maxpool2d", {"pool": [2, 2], "stride": [2, 2]}),
        LayerSpec("conv2d", {"stride": [1, 1], "padding": [0, 0]}),
        LayerSpec("relu", {}),
        LayerSpec("maxpool2d", {"pool": [2, 2], "stride": [2, 2]}),
        LayerSpec("flatten", {}),
        LayerSpec("fully-connected", {}),
        LayerSpec("relu", {}),
        LayerSpec("fully-connected", {}),
    )
    params = {
        0: {"weight": pw(sd["conv1.weight"]), "bias": pw(sd["conv1.bias"])},
        3: {"weight": pw(sd["conv2.weight"]), "bias": pw(sd["conv2.bias"])},
        7: {"weight": pw(sd["fc1.weight"]), "bias": pw(sd["fc1.bias"])},
        9: {"weight": pw(sd["fc2.weight"]), "bias": pw(sd["fc2.bias"])},
    }
    return Model(
        name="lenet-fixture",
        input_shape=(1, 28, 28),
        class_count=10,
        layers=layers,
        params=params,
        fmt=FIXTURE_FMT,
    )


def main():
    torch.manual_seed(0)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)

    train = make_synthetic_set(seed=TRAIN_SEED, n=N_TRAIN)
    val = make_synthetic_set(seed=VAL_SEED, n=N_VAL)
    xs = torch.from_numpy(batch_images(train))
    ys = torch.from_numpy(labels_of(train))

    net = Net()
    opt = torch.optim.Adam(net.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    for epoch in range(EPOCHS):
        perm = torch.randperm(len(train))
        total = 0.0
        for i in range(0, len(train), BATCH):
            idx = perm[i : i + BATCH]
            opt.zero_grad()
            loss = loss_fn(net(xs[idx]), ys[idx])
            loss.backward()
            opt.step()
            total += float(loss) * len(idx)
        print(f"epoch {epoch}: loss {total / len(train):.4f}")

    net.eval()
    model = export(net)

    with torch.no_grad():
        ref = net(torch.from_numpy(batch_images(val[:64]))).numpy()
    ours = forward(model, batch_images(val[:64]))
    print("max |torch - faultclip| on 64 samples:", float(np.abs(ref - ours).max()))

    print("fixture accuracy on train blobs:", evaluate_accuracy(model, train))
    print("fixture accuracy on fresh blobs:", evaluate_accuracy(model, val))

    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    save_model(model, OUT)
    print("wrote", os.path.abspath(OUT))


if __name__ == "__main__":
    main()
