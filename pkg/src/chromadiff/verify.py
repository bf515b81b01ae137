"""Self-contained oracle property suite behind the `verify` CLI verb.

Every check runs against the closed-form Gaussian denoiser, whose
reverse chain is affine and therefore has exactly predictable behavior:
injection responses must not depend on the stream seed, must scale
linearly with the injection strength, and must add across disjoint
windows. Results come back as (name, passed, detail) triples.
"""

import numpy as np

from .denoisers import GaussianOracleDenoiser
from .rng import NoiseStream
from .sampler import ColorMask, InjectionConfig, ddim_sample, sample
from .schedule import build_linear_schedule


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm relative deviation of a from b."""
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)) / scale)


def run_property_suite(steps: int = 1000, size: int = 8, tol: float = 1e-9,
                       seeds=(11, 22, 33), chains: int = 4000):
    schedule = build_linear_schedule(steps)
    oracle = GaussianOracleDenoiser(np.float64(0.0), 1.0, schedule)
    shape = (3, size, size)
    red = InjectionConfig(s_noise=0.01, mask=ColorMask((1.0, 0.0, 0.0)), window_last=min(10, steps))
    results = []

    def record(name, passed, detail):
        results.append((name, bool(passed), detail))

    # injection disabled must be bit-identical to no injection logic at all
    ok = True
    for seed in seeds:
        stream = NoiseStream(seed, shape)
        zero = InjectionConfig(s_noise=0.0, mask=ColorMask((1.0, 0.0, 0.0)))
        a = sample(oracle, schedule, stream, zero)
        b = sample(oracle, schedule, stream, None)
        ok &= a.tobytes() == b.tobytes()
        c = ddim_sample(oracle, schedule, stream.initial(), zero)
        d = ddim_sample(oracle, schedule, stream.initial(), None)
        ok &= c.tobytes() == d.tobytes()
    record("zero-injection identity (both samplers)", ok, f"{len(seeds)} seeds, bit-exact")

    # response = output(inj) - output(baseline) must not depend on the seed
    responses = []
    for seed in seeds:
        stream = NoiseStream(seed, shape)
        responses.append(sample(oracle, schedule, stream, red) - sample(oracle, schedule, stream, None))
    worst = max(_rel(r, responses[0]) for r in responses[1:])
    record("response seed invariance", worst <= tol, f"max rel dev {worst:.3e}")

    # response must be linear in s_noise
    stream = NoiseStream(seeds[0], shape)
    base = sample(oracle, schedule, stream, None)
    resp = {}
    for s in (0.005, 0.01, 0.02):
        inj = InjectionConfig(s_noise=s, mask=red.mask, window_last=red.window_last)
        resp[s] = sample(oracle, schedule, stream, inj) - base
    worst = max(_rel(2.0 * resp[0.005], resp[0.01]), _rel(2.0 * resp[0.01], resp[0.02]))
    record("response scale linearity", worst <= tol, f"max rel dev {worst:.3e}")

    # responses of disjoint windows must add up to the full-window response
    half = min(10, steps) // 2
    if half >= 1:
        w_full = InjectionConfig(s_noise=0.01, mask=red.mask, window_first=1, window_last=2 * half)
        w_a = InjectionConfig(s_noise=0.01, mask=red.mask, window_first=1, window_last=half)
        w_b = InjectionConfig(s_noise=0.01, mask=red.mask, window_first=half + 1, window_last=2 * half)
        r_full = sample(oracle, schedule, stream, w_full) - base
        r_sum = (sample(oracle, schedule, stream, w_a) - base) + (
            sample(oracle, schedule, stream, w_b) - base
        )
        worst = _rel(r_sum, r_full)
        record("response window additivity", worst <= tol, f"max rel dev {worst:.3e}")

    # full chain must reproduce the target Gaussian's moments
    mu0, sigma0 = 2.0, 0.5
    moments = GaussianOracleDenoiser(np.float64(mu0), sigma0, schedule)
    stream = NoiseStream(seeds[0], (chains,))
    out = sample(moments, schedule, stream, None)
    se_mean = out.std(ddof=1) / np.sqrt(chains)
    mean_ok = abs(out.mean() - mu0) <= 3.0 * se_mean
    sd = out.std(ddof=1)
    sd_ok = abs(sd - sigma0) <= 0.05 * sigma0
    record(
        "end-to-end chain moments",
        mean_ok and sd_ok,
        f"mean {out.mean():.4f} (target {mu0}), sd {sd:.4f} (target {sigma0})",
    )
    return results
