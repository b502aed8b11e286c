"""How real numbers live in the quantum registers.

Every scalar is a d-bit two's-complement string with q bits after the
binary point; a point in R^n is the concatenation of its coordinates.  The
most significant bit of a register is its sign, which is exactly the bit
the search marks on.
"""
import numpy as np

from qpsearch import (
    FixedPointFormat,
    decode_point,
    decode_scalar,
    encode_point,
    encode_scalar,
    encode_scalar_saturating,
    negate_bits,
    sign_bit,
)

fmt = FixedPointFormat(total_bits=8, frac_bits=3)
print(f"format: {fmt.total_bits} bits, {fmt.frac_bits} fractional")
print(f"range [{fmt.min_value}, {fmt.max_value}] in steps of {fmt.resolution}\n")

for v in (3.0, -3.0, 0.625, -15.875, 0.0):
    bits = encode_scalar(v, fmt)
    print(f"{v:>8} -> {bits}   sign={sign_bit(bits)}   back={decode_scalar(bits, fmt)}")

print("\nnegation is flip-all-bits-plus-one:")
bits = encode_scalar(5.25, fmt)
print(f"  {bits} (5.25) -> {negate_bits(bits)} ({decode_scalar(negate_bits(bits), fmt)})")
most_negative = "1" + "0" * 7
print(f"  the most negative value wraps onto itself: {negate_bits(most_negative)}")

print("\npoints concatenate coordinate encodings:")
x = np.array([1.5, -2.25])
bits = encode_point(x, fmt)
print(f"  {x} -> {bits[:8]}|{bits[8:]}")
print(f"  decoded: {decode_point(bits, fmt)}")

print("\nobjective values may opt into saturation (points never do):")
print(f"  encode_scalar_saturating(999) -> {encode_scalar_saturating(999.0, fmt)}")
