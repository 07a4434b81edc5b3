import numpy as np


def glorot_uniform(rng, shape, dtype=np.float32):
    fan_out, fan_in = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def embedding_uniform(rng, shape, dtype=np.float32, scale=0.1):
    return rng.uniform(-scale, scale, size=shape).astype(dtype)
