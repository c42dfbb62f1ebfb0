"""
Deterministic augmentation streams
==================================

Every augmented copy draws its parameters from a private SplitMix64 stream
derived from (spec seed, image id, copy index). Same inputs, same pixels --
across runs, machines, and thread counts.
"""

import hashlib

import numpy as np

from colpoprep.augment import apply_pipeline, default_spec, derive_stream

rng = np.random.default_rng(3)
img = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)


def digest(a):
    return hashlib.sha256(a.tobytes()).hexdigest()[:12]


spec = default_spec(seed=2024, copies_per_image=3)
print("transforms in the default spec:")
for t in spec.transforms:
    print("  ", t.kind.value, t.params)

# copy 0, twice: identical bytes
a = apply_pipeline(img, spec, derive_stream(spec, "Abnormal/case1.png", 0))
b = apply_pipeline(img, spec, derive_stream(spec, "Abnormal/case1.png", 0))
print("copy 0 run twice:", digest(a), digest(b), "equal:", np.array_equal(a, b))

# different copy index -> a different draw stream -> (almost surely) different pixels
c = apply_pipeline(img, spec, derive_stream(spec, "Abnormal/case1.png", 1))
print("copy 1:           ", digest(c), "same as copy 0:", np.array_equal(a, c))

# a different image id also diverges, even with the same copy index
d = apply_pipeline(img, spec, derive_stream(spec, "Abnormal/case2.png", 0))
print("other image id:   ", digest(d), "same as copy 0:", np.array_equal(a, d))

# and a different seed re-rolls everything
other = default_spec(seed=2025, copies_per_image=3)
e = apply_pipeline(img, other, derive_stream(other, "Abnormal/case1.png", 0))
print("other seed:       ", digest(e), "same as copy 0:", np.array_equal(a, e))
