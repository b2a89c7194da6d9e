"""Scratch: sim1 DDICA pipeline grid (pca dims, budget)."""
import sys
import time
import numpy as np
from ddica.datagen import gen_sim1
from ddica.metrics import match_components
from ddica.network import NetworkConfig, TrainConfig, init_model, train, predict_sources
from ddica.whitening import WhiteningConfig
from ddica.entropy import EntropyConfig
from ddica.linalg import symmetric_eigen
from ddica.rng import split_seed

pca = int(sys.argv[1])
lr = float(sys.argv[2])
epochs = int(sys.argv[3])
silver = len(sys.argv) > 4 and sys.argv[4] == "silverman"

for trial in range(3):
    seed = 100 + trial
    ds = gen_sim1(seed)
    x = ds.observations
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    eig = symmetric_eigen(xc @ xc.T / x.shape[1])
    proj = (eig.eigenvectors[:, :pca] / np.sqrt(np.maximum(eig.eigenvalues[:pca], 1e-12))).T
    xw = proj @ xc

    ncfg = NetworkConfig(input_dim=pca, output_dim=3, seed=split_seed(seed, 2))
    m = init_model(ncfg)
    wcfg = WhiteningConfig(iterations_per_pair=50)
    ecfg = EntropyConfig(silverman=silver)
    tcfg = TrainConfig(learning_rate=lr, batch_size=256, epochs=epochs,
                       seed=split_seed(seed, 3), whitening=wcfg, entropy=ecfg)
    marks = []

    def on_step(step, loss, out, diag):
        if step % 200 == 0:
            est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
            marks.append((step, match_components(est, ds.sources).mean_abs_corr))

    t0 = time.time()
    m, hist = train(m, xw, tcfg, on_step=on_step)
    est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
    rd = match_components(est, ds.sources)
    traj = " ".join(f"{s}:{c:.3f}" for s, c in marks)
    print(f"pca={pca} lr={lr} trial {trial}: ddica {rd.mean_abs_corr:.4f} "
          f"({len(hist)} steps {time.time()-t0:.0f}s) traj {traj}", flush=True)
