# What a single stored-bit flip does to a weight, in both numeric formats.
#
# Weights live in memory as 32-bit words. The same physical event -- one
# bit inverting -- has wildly different numerical meaning depending on how
# the word is interpreted.

import numpy as np

from faultclip import FIXED32_Q15_16, FLOAT32, decode_word, encode_word

w = 0.15625  # a typical small weight, exactly representable everywhere

print(f"weight value: {w}")
word_f = encode_word(w, FLOAT32)
word_q = encode_word(w, FIXED32_Q15_16)
print(f"float32 word: 0x{word_f:08X}")
print(f"Q15.16 word:  0x{word_q:08X}")
print()

print("flipping each bit of the float32 word (bit 31 = sign, 30..23 = exponent):")
for bit in (31, 30, 29, 23, 22, 0):
    flipped = decode_word(word_f ^ (1 << bit), FLOAT32)
    print(f"  bit {bit:2d} -> {flipped!r}")

print()
print("same flips on the Q15.16 word (linear magnitude ladder, no Inf/NaN):")
for bit in (31, 30, 29, 23, 22, 0):
    flipped = decode_word(word_q ^ (1 << bit), FIXED32_Q15_16)
    print(f"  bit {bit:2d} -> {flipped!r}")

# The float32 exponent MSB (bit 30) is the catastrophic one: a 0->1 flip
# multiplies the weight by 2**128, which downstream layers turn into
# saturated "high-intensity" activations. In fixed point, the top
# magnitude bits add bounded (but still large) offsets instead.

assert decode_word(word_f ^ (1 << 30), FLOAT32) == np.inf or \
       decode_word(word_f ^ (1 << 30), FLOAT32) > 1e30
