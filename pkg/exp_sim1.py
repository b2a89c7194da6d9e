"""Scratch: sim1 trial calibration (criterion 6)."""
import sys
import time
import numpy as np
from ddica.datagen import gen_sim1
from ddica.baselines import FastIcaConfig, fastica
from ddica.metrics import match_components
from ddica.network import NetworkConfig, TrainConfig, init_model, train, predict_sources
from ddica.whitening import WhiteningConfig
from ddica.entropy import EntropyConfig
from ddica.linalg import symmetric_eigen
from ddica.rng import split_seed

lr = float(sys.argv[1]) if len(sys.argv) > 1 else 1e-4
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 200
trials = int(sys.argv[3]) if len(sys.argv) > 3 else 3

for trial in range(trials):
    seed = 100 + trial
    ds = gen_sim1(seed)
    x = ds.observations  # 50 x 1089

    fi = fastica(x, FastIcaConfig(n_components=3, seed=split_seed(seed, 4)))
    rf = match_components(fi.sources, ds.sources)

    # PCA to 3 comps + whiten
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    eig = symmetric_eigen(xc @ xc.T / x.shape[1])
    proj = (eig.eigenvectors[:, :3] / np.sqrt(eig.eigenvalues[:3])).T
    xw = proj @ xc

    ncfg = NetworkConfig(input_dim=3, output_dim=3, seed=split_seed(seed, 2))
    m = init_model(ncfg)
    wcfg = WhiteningConfig(iterations_per_pair=50)
    tcfg = TrainConfig(learning_rate=lr, batch_size=256, epochs=epochs,
                       seed=split_seed(seed, 3), whitening=wcfg)
    t0 = time.time()
    marks = []

    def on_step(step, loss, out, diag):
        if step % 200 == 0:
            est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
            marks.append((step, match_components(est, ds.sources).mean_abs_corr))

    m, hist = train(m, xw, tcfg, on_step=on_step)
    est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
    rd = match_components(est, ds.sources)
    traj = " ".join(f"{s}:{c:.3f}" for s, c in marks)
    print(f"trial {trial}: fastica {rf.mean_abs_corr:.4f} | ddica {rd.mean_abs_corr:.4f} "
          f"({len(hist)} steps, {time.time()-t0:.0f}s) traj {traj}", flush=True)
