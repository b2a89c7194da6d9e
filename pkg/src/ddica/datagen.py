"""Synthetic blind-source-separation benchmarks.

Three generators, all bitwise reproducible from (generator, seed, params):

  sim1  three digit-shaped 33 x 33 spatial sources mixed over time frames,
        corrupted by spatially smoothed AR(1) noise calibrated to a target
        signal-to-noise ratio.
  sim2  three smooth 2-D patterns (radial ring, sinusoidal spiral, bipolar
        blobs) under a controllable nonlinear mixing
        X = A S + a tanh(A S) + a^2 sin(A S).
  sim3  five 2-D Gaussian clusters embedded in ten dimensions, the extra
        eight dimensions being near-silent noise.

Datasets persist as a directory of headerless CSV matrices plus a
meta.json that records every generation parameter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DimensionError
from .masks import SIDE, SOURCE_MASKS
from .rng import make_rng

_AR_COEF = 0.47
_FWHM = 6.0


@dataclass
class Dataset:
    sources: np.ndarray
    observations: np.ndarray
    mixing: np.ndarray
    meta: dict
    labels: np.ndarray = None


def _gaussian_field_from(rng, side: int, fwhm: float) -> np.ndarray:
    """Smoothed white Gaussian field rescaled to unit sample sd.

    fwhm = 0 is the delta-kernel limit and returns the raw field.
    Smoothing kernel sd is fwhm / (2 sqrt(2 ln 2)), truncated at 4 sd
    with reflect padding.
    """
    if fwhm < 0.0:
        raise ConfigError(f"fwhm must be non-negative, got {fwhm}")
    white = rng.standard_normal((side, side))
    if fwhm == 0.0:
        field = white
    else:
        sd = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        field = ndimage.gaussian_filter(white, sigma=sd, mode="reflect", truncate=4.0)
    return field / field.std()


def gaussian_field(seed: int, side: int, fwhm: float) -> np.ndarray:
    return _gaussian_field_from(make_rng(seed), side, fwhm)


def linear_mix(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if a.ndim != 2 or s.ndim != 2 or a.shape[1] != s.shape[0]:
        raise DimensionError(f"cannot mix {a.shape} with {s.shape}")
    return a @ s


def gen_sim1(seed: int, t_frames: int = 50, snr: float = 0.4) -> Dataset:
    """Digit-shaped spatial sources under smoothed AR(1) noise at a fixed SNR.

    Sources: the three 33 x 33 digit supports with active pixels drawn
    uniform on [0.5, 1], flattened to 3 x 1089.  Time courses are seeded
    unit-normal (t_frames x 3).  Noise frames are unit-sd smoothed fields
    (FWHM 6) chained by n_t = 0.47 n_(t-1) + fresh field, then scaled by
    sigma so that snr = sum(lam_i) / (t_frames * sigma^2), where lam_i are
    the nonzero eigenvalues of the sample covariance of the noiseless
    mixture.
    """
    if t_frames < 3:
        raise ConfigError(f"t_frames must be >= 3, got {t_frames}")
    if snr <= 0.0:
        raise ConfigError(f"snr must be positive, got {snr}")
    rng = make_rng(seed)
    n_vox = SIDE * SIDE
    sources = np.empty((3, n_vox))
    for i in range(3):
        intens = rng.uniform(0.5, 1.0, size=(SIDE, SIDE))
        sources[i] = np.where(SOURCE_MASKS[i], intens, 0.0).ravel()
    mixing = rng.standard_normal((t_frames, 3))
    clean = mixing @ sources

    noise = np.empty((t_frames, n_vox))
    frame = _gaussian_field_from(rng, SIDE, _FWHM).ravel()
    noise[0] = frame
    for t in range(1, t_frames):
        frame = _AR_COEF * frame + _gaussian_field_from(rng, SIDE, _FWHM).ravel()
        noise[t] = frame

    cov = np.cov(clean)
    lam = np.sort(np.linalg.eigvalsh(cov))[::-1]
    signal_power = float(lam[:3].sum())
    sigma2 = signal_power / (t_frames * snr)
    observations = clean + math.sqrt(sigma2) * noise

    meta = {
        "generator": "sim1",
        "seed": int(seed),
        "params": {"t_frames": int(t_frames), "snr": float(snr)},
        "grid": [SIDE, SIDE],
        "ar_coef": _AR_COEF,
        "fwhm": _FWHM,
        "intensity_range": [0.5, 1.0],
        "signal_power": signal_power,
        "sigma2": sigma2,
    }
    return Dataset(sources, observations, mixing, meta)


def gen_sim2(seed: int, nl_level: float, grid: int = 64) -> Dataset:
    """Three smooth spatial patterns under controllable nonlinear mixing.

    On a grid x grid lattice over [-1, 1]^2:
        ring    exp(-(r - 0.5)^2 / (2 * 0.1^2))
        spiral  sin(5 theta + 10 r)
        blobs   exp(-((x - 0.5)^2 + y^2) / (2 * 0.2^2))
              - exp(-((x + 0.5)^2 + y^2) / (2 * 0.2^2))
    Each source is standardized to zero mean, unit variance.  Mixing is a
    seeded 3 x 3 unit-normal matrix followed by
    X = A S + a tanh(A S) + a^2 sin(A S) with a = nl_level in [0, 1].
    """
    if not 0.0 <= nl_level <= 1.0:
        raise ConfigError(f"nl_level must lie in [0, 1], got {nl_level}")
    if grid < 16:
        raise ConfigError(f"grid must be >= 16, got {grid}")
    rng = make_rng(seed)
    axis = np.linspace(-1.0, 1.0, grid)
    x, y = np.meshgrid(axis, axis, indexing="xy")
    r = np.sqrt(x * x + y * y)
    theta = np.arctan2(y, x)
    ring = np.exp(-((r - 0.5) ** 2) / (2.0 * 0.1 ** 2))
    spiral = np.sin(5.0 * theta + 10.0 * r)
    blobs = np.exp(-(((x - 0.5) ** 2) + y * y) / (2.0 * 0.2 ** 2)) - np.exp(
        -(((x + 0.5) ** 2) + y * y) / (2.0 * 0.2 ** 2)
    )
    sources = np.stack([p.ravel() for p in (ring, spiral, blobs)])
    sources = (sources - sources.mean(axis=1, keepdims=True)) / sources.std(axis=1, keepdims=True)
    mixing = rng.standard_normal((3, 3))
    mixed = mixing @ sources
    observations = mixed + nl_level * np.tanh(mixed) + nl_level ** 2 * np.sin(mixed)
    meta = {
        "generator": "sim2",
        "seed": int(seed),
        "params": {"nl_level": float(nl_level), "grid": int(grid)},
        "grid": [int(grid), int(grid)],
        "pattern_params": {
            "ring_radius": 0.5,
            "ring_width": 0.1,
            "spiral_freqs": [5.0, 10.0],
            "blob_sigma": 0.2,
            "blob_centers": [[0.5, 0.0], [-0.5, 0.0]],
        },
    }
    return Dataset(sources, observations, mixing, meta)


def gen_sim3(seed: int, n_samples: int = 5000) -> Dataset:
    """Five labeled 2-D Gaussian clusters padded to ten dimensions.

    Cluster centers are uniform on [-5, 5]^2, per-cluster variances
    uniform on [0.5, 3], samples split evenly across clusters.  Eight
    additional unit-normal dimensions scaled by 0.01 complete the
    ten-dimensional observations.
    """
    if n_samples < 50:
        raise ConfigError(f"n_samples must be >= 50, got {n_samples}")
    rng = make_rng(seed)
    n_clusters = 5
    centers = rng.uniform(-5.0, 5.0, size=(n_clusters, 2))
    variances = rng.uniform(0.5, 3.0, size=n_clusters)
    counts = [n_samples // n_clusters] * n_clusters
    for i in range(n_samples % n_clusters):
        counts[i] += 1
    pieces = []
    labels = []
    for k in range(n_clusters):
        pts = centers[k] + math.sqrt(variances[k]) * rng.standard_normal((counts[k], 2))
        pieces.append(pts)
        labels.extend([k] * counts[k])
    informative = np.vstack(pieces)
    noise = 0.01 * rng.standard_normal((n_samples, 8))
    observations = np.hstack([informative, noise]).T
    sources = informative.T
    mixing = np.vstack([np.eye(2), np.zeros((8, 2))])
    meta = {
        "generator": "sim3",
        "seed": int(seed),
        "params": {"n_samples": int(n_samples)},
        "n_clusters": n_clusters,
        "centers": centers.tolist(),
        "variances": variances.tolist(),
        "noise_scale": 0.01,
        "observations_transposed": True,
    }
    return Dataset(sources, observations, mixing, meta, labels=np.asarray(labels))


_GENERATORS = {"sim1": gen_sim1, "sim2": gen_sim2, "sim3": gen_sim3}


def generate(name: str, seed: int, **params) -> Dataset:
    if name not in _GENERATORS:
        raise ConfigError(f"unknown dataset {name!r}; choose from {sorted(_GENERATORS)}")
    return _GENERATORS[name](seed, **params)


# --- persistence ----------------------------------------------------------


def _write_matrix(path, m: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in np.atleast_2d(m):
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def _read_matrix(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{path} does not hold a matrix")
    return arr


def save_dataset(ds: Dataset, outdir):
    """Write sources.csv / observations.csv / mixing.csv / meta.json.

    Observations flagged observations_transposed are stored with samples
    as rows so each CSV record is one sample.
    """
    import os

    os.makedirs(outdir, exist_ok=True)
    obs = ds.observations.T if ds.meta.get("observations_transposed") else ds.observations
    _write_matrix(os.path.join(outdir, "sources.csv"), ds.sources)
    _write_matrix(os.path.join(outdir, "observations.csv"), obs)
    _write_matrix(os.path.join(outdir, "mixing.csv"), ds.mixing)
    if ds.labels is not None:
        with open(os.path.join(outdir, "labels.csv"), "w", encoding="utf-8", newline="\n") as fh:
            for v in ds.labels:
                fh.write(f"{int(v)}\n")
    with open(os.path.join(outdir, "meta.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(ds.meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_dataset(indir) -> Dataset:
    import os

    meta_path = os.path.join(indir, "meta.json")
    if not os.path.exists(meta_path):
        raise FileNotFoundError(meta_path)
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    sources = _read_matrix(os.path.join(indir, "sources.csv"))
    observations = _read_matrix(os.path.join(indir, "observations.csv"))
    if meta.get("observations_transposed"):
        observations = observations.T
    mixing = _read_matrix(os.path.join(indir, "mixing.csv"))
    labels = None
    labels_path = os.path.join(indir, "labels.csv")
    if os.path.exists(labels_path):
        labels = np.loadtxt(labels_path, dtype=np.int64).reshape(-1)
    return Dataset(sources, observations, mixing, meta, labels=labels)
