"""Scratch: sim1 variants: unwhitened PCs; ordering at lower-noise anchors."""
import sys
import numpy as np
from ddica.datagen import gen_sim1
from ddica.baselines import FastIcaConfig, fastica
from ddica.metrics import match_components
from ddica.network import NetworkConfig, TrainConfig, init_model, train, predict_sources
from ddica.whitening import WhiteningConfig
from ddica.entropy import EntropyConfig
from ddica.linalg import symmetric_eigen
from ddica.rng import split_seed

mode = sys.argv[1]

def fit(ds, pca, whiten_in, epochs, lr, silver, seed):
    x = ds.observations
    xc = x - x.mean(axis=1, keepdims=True)
    eig = symmetric_eigen(xc @ xc.T / x.shape[1])
    basis = eig.eigenvectors[:, :pca]
    if whiten_in:
        proj = (basis / np.sqrt(np.maximum(eig.eigenvalues[:pca], 1e-12))).T
    else:
        proj = basis.T
    xw = proj @ xc
    ncfg = NetworkConfig(input_dim=pca, output_dim=3, seed=split_seed(seed, 2))
    m = init_model(ncfg)
    wcfg = WhiteningConfig(iterations_per_pair=50)
    tcfg = TrainConfig(learning_rate=lr, batch_size=256, epochs=epochs,
                       seed=split_seed(seed, 3), whitening=wcfg,
                       entropy=EntropyConfig(silverman=silver))
    m, hist = train(m, xw, tcfg)
    est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
    return match_components(est, ds.sources).mean_abs_corr

if mode == "pca10raw":
    for trial in range(3):
        seed = 100 + trial
        ds = gen_sim1(seed)
        c = fit(ds, 10, False, 250, 1e-4, True, seed)
        print(f"pca10 raw trial {trial}: ddica {c:.4f}", flush=True)
else:
    snr = float(mode)
    dd_all, fa_all = [], []
    for trial in range(4):
        seed = 100 + trial
        ds = gen_sim1(seed, snr=snr)
        dd = fit(ds, 3, True, 250, 1e-4, True, seed)
        fi = fastica(ds.observations, FastIcaConfig(n_components=3, seed=split_seed(seed, 4)))
        fa = match_components(fi.sources, ds.sources).mean_abs_corr
        dd_all.append(dd)
        fa_all.append(fa)
        print(f"snr={snr} trial {trial}: ddica {dd:.4f} fastica {fa:.4f}", flush=True)
    print(f"snr={snr}: DDICA {np.mean(dd_all):.4f} FastICA {np.mean(fa_all):.4f}")
