"""Desk-scale training probe: track nu and the error norms over epochs."""

import argparse
import json
import sys
import time

import numpy as np

from pinn_control import NetworkConfig
from pinn_control import problems as P
from pinn_control.metrics import error_report
from pinn_control.reference import Grid, gradient_method
from pinn_control.sampling import sample_dataset
from pinn_control.train import TrainConfig, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("test_id")
    ap.add_argument("--epochs", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nx", type=int, default=201)
    ap.add_argument("--report-every", type=int, default=5000)
    args = ap.parse_args()

    spec = P.make_problem(args.test_id)
    grid = Grid.from_domain(spec.domain, nx=args.nx)
    t0 = time.time()
    ref = gradient_method(spec, grid)
    print(f"reference: {time.time()-t0:.1f}s, {len(ref.J_history)-1} iters, J*={ref.J_history[-1]:.6g}", flush=True)
    ds = sample_dataset(ref, spec, seed=args.seed)

    milestones = []

    def cb(entry, params, model):
        if entry.epoch % args.report_every == 0 and entry.epoch > 0:
            rep, _ = error_report(spec, ref, params, model, grid, epochs=entry.epoch)
            rec = dict(epoch=entry.epoch, loss=entry.breakdown.total, nu=entry.nu,
                       E1=rep.E1, E2=rep.E2, E3=rep.E3, E4=rep.E4,
                       elapsed=round(time.time()-t0, 1))
            milestones.append(rec)
            print(json.dumps(rec), flush=True)

    cfg = TrainConfig(epsilon_tol=spec.eps_tol, max_epochs=args.epochs,
                      log_every=200, seed=args.seed)
    params, model, hist = train(spec, ds, NetworkConfig(output_dim=spec.output_dim, seed=args.seed), cfg, log_callback=cb)
    rep, _ = error_report(spec, ref, params, model, grid, epochs=hist.epochs)
    print(json.dumps(dict(final=True, epochs=hist.epochs, stop=hist.stop_reason,
                          loss=hist.entries[-1].breakdown.total, nu=model.nu,
                          E1=rep.E1, E2=rep.E2, E3=rep.E3, E4=rep.E4,
                          elapsed=round(time.time()-t0, 1))), flush=True)


if __name__ == "__main__":
    sys.exit(main())
