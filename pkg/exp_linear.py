"""Scratch experiment: 2-source linear mixture, criterion-5 calibration."""
import sys
import numpy as np
from ddica.network import NetworkConfig, TrainConfig, init_model, train, predict_sources
from ddica.metrics import match_components
from ddica.entropy import EntropyConfig
from ddica.whitening import WhiteningConfig
from ddica.rng import make_rng, split_seed

variant = sys.argv[1]

rng = make_rng(42)
n = 2000
t = np.linspace(0, 8 * np.pi, n)
S = np.vstack([np.sin(t), rng.uniform(-1, 1, n)])
A = rng.standard_normal((2, 2))
X = A @ S
Xc = X - X.mean(axis=1, keepdims=True)
lam, U = np.linalg.eigh(Xc @ Xc.T / n)
Xw = (U / np.sqrt(lam)).T @ Xc

wcfg = WhiteningConfig(iterations_per_pair=50)
ecfg = EntropyConfig()
lr, epochs, rec = 1e-4, 700, 0.0
if variant == "lr1e-4":
    pass
elif variant == "lr3e-4":
    lr = 3e-4
elif variant == "silverman":
    lr, ecfg = 1e-3, EntropyConfig(silverman=True)
elif variant == "recon":
    lr, rec = 1e-3, 0.5
elif variant == "recon1e-4":
    rec = 0.5

ncfg = NetworkConfig(input_dim=2, output_dim=2, seed=1)
m = init_model(ncfg, decoder=rec > 0)
tcfg = TrainConfig(learning_rate=lr, batch_size=256, epochs=epochs, seed=2,
                   whitening=wcfg, entropy=ecfg, reconstruction_weight=rec)

marks = {}
seen = [0]

def on_step(step, loss, out, diag):
    seen[0] = step
    if step % 700 == 0:
        est = predict_sources(m, Xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
        r = match_components(est, S)
        marks[step] = (loss, r.mean_abs_corr)
        print(f"{variant} step {step}: loss {loss:.4f} corr {r.mean_abs_corr:.4f}", flush=True)

m, hist = train(m, Xw, tcfg, on_step=on_step)
est = predict_sources(m, Xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
r = match_components(est, S)
print(f"{variant} FINAL steps={len(hist)} loss={hist[-1]:.4f} corr={r.mean_abs_corr:.4f} {r.correlations}")
