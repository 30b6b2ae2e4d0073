"""Regenerates the bundled CSV datasets (deterministic; numpy only)."""
import numpy as np
from pathlib import Path

HERE = Path(__file__).resolve().parent


def write(name, cols, X, y):
    with open(HERE / name, "w") as f:
        f.write(",".join(cols + ["y"]) + "\n")
        for row, t in zip(X, y):
            f.write(",".join(f"{v:.6f}" for v in row) + f",{t:.6f}\n")


def wave():
    rng = np.random.default_rng(11)
    n = 1200
    X = rng.uniform(-2.0, 2.0, size=(n, 3))
    mean = np.sin(2.0 * X[:, 0]) + 0.5 * X[:, 1]
    sd = 0.1 + 0.9 * np.abs(X[:, 0]) * (X[:, 2] > 0)
    y = mean + sd * rng.standard_normal(n)
    write("wave.csv", ["x1", "x2", "x3"], X, y)


def plant():
    rng = np.random.default_rng(23)
    n = 1800
    temp = rng.uniform(5.0, 35.0, n)
    vacuum = rng.uniform(25.0, 80.0, n)
    pressure = rng.normal(1013.0, 6.0, n)
    humidity = rng.uniform(25.0, 100.0, n)
    mean = 495.0 - 1.8 * temp - 0.25 * vacuum + 0.06 * (pressure - 1013.0) - 0.15 * (humidity - 60.0) / 10.0
    sd = 2.0 + 6.0 * (humidity > 85.0) + 0.1 * temp
    y = mean + sd * rng.standard_normal(n)
    X = np.column_stack([temp, vacuum, pressure, humidity])
    write("plant.csv", ["temp", "vacuum", "pressure", "humidity"], X, y)


if __name__ == "__main__":
    wave()
    plant()
