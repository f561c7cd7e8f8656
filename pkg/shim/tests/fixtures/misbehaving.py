"""Improver that returns wrong shapes from improve and raises from perturb."""
import numpy as np


class Improver:
    def __init__(self, hex_num=11, seed: int = 0):
        self.hex_num = hex_num

    def generate_config(self, seed=None):
        centers = np.stack([np.arange(self.hex_num) * 2.5,
                            np.zeros(self.hex_num)], axis=1)
        return centers, np.zeros(self.hex_num)

    def improve(self, input_config, seed=None):
        centers, angles = input_config
        return centers[:-1], angles[:-1]  # one hexagon short

    def perturb(self, input_config, intensity: float, seed=None):
        raise RuntimeError("perturb exploded on purpose")


def entrypoint():
    return Improver
