"""Compare the additive quantization noise model with a simulated quantizer.

For each bit width, solve the fixed-bit design on a few channels, push
Gaussian symbols through the combiner with real uniform quantizers and
compare the measured sum rate with the model's.
"""

import argparse

import numpy as np

from radc_ee.baselines import uniform_bits_solve
from radc_ee.metrics import sum_rate
from radc_ee.pdd import Problem
from radc_ee.quantization import simulate_quantizer
from radc_ee.scenario import PRESETS, gen_channel, snr_scale_from_db


def measured_rate(z, H, W, noise_power, samples, rng):
    K, N = H.shape[1], H.shape[0]
    s = (rng.standard_normal((K, samples)) + 1j * rng.standard_normal((K, samples))) / np.sqrt(2)
    n = np.sqrt(noise_power / 2) * (rng.standard_normal((N, samples)) + 1j * rng.standard_normal((N, samples)))
    y = (W @ z.G).conj().T @ (H @ (np.sqrt(z.p)[:, None] * s) + n)
    r = (z.D @ z.U).conj().T @ simulate_quantizer(y, z.b)
    a = np.mean(r * s.conj(), axis=1)
    err = np.mean(np.abs(r - a[:, None] * s) ** 2, axis=1)
    live = z.p > 0
    return float(np.sum(np.log1p(np.abs(a[live]) ** 2 / err[live])))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--snr", type=float, default=30.0)
    ap.add_argument("--bits", type=int, nargs="+", default=[1, 2, 3, 4, 6])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--samples", type=int, default=200_000)
    args = ap.parse_args()
    print(f"{'bits':>4} {'model':>10} {'measured':>10} {'gap':>8}")
    for b in args.bits:
        cfg = PRESETS["desk"].with_(snr_scale=snr_scale_from_db(args.snr), avg_bits=float(b))
        model, meas = [], []
        for seed in range(args.trials):
            H = gen_channel(cfg, seed).H
            prob = Problem.build(cfg, H)
            z, _ = uniform_bits_solve(cfg, H, W=prob.W)
            model.append(sum_rate(z, H, prob.W, cfg.noise_power))
            meas.append(measured_rate(z, H, prob.W, cfg.noise_power, args.samples, np.random.default_rng(seed)))
        m, e = np.mean(model), np.mean(meas)
        print(f"{b:>4} {m:>10.4f} {e:>10.4f} {(e - m) / m:>8.1%}")


if __name__ == "__main__":
    main()
