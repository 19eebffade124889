"""Artifact property suites behind the ``verify`` subcommand.

Each check returns (name, passed, detail).  Checks run against the files a
``build`` (and optionally ``simulate``) left on disk, so corrupted dumps are
caught; failures carry the offending entry as a counterexample.
"""

from __future__ import annotations

import os

import numpy as np

from .levelsets import check_nesting
from .plants import rng_stream

STREAM_VERIFY = 7


def _sample_in_ball(rng, center, radius, count):
    d = len(center)
    dirs = rng.normal(size=(count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
    return center + dirs * radii[:, None]


def run_all(cfg, log=print):
    from . import pipeline  # lazy: pipeline imports this module at bottom

    checks = []

    def add(name, passed, detail=""):
        checks.append((name, bool(passed), detail))
        log(f"verify {'PASS' if passed else 'FAIL'} {name}"
            + (f": {detail}" if detail else ""))

    dataset, model, controller = pipeline.load_artifacts(cfg)
    plant = pipeline.make_plant(cfg)
    kernel = model.kernel
    bounds = pipeline.make_bounds(cfg, kernel)
    rng = rng_stream(cfg.seed, STREAM_VERIFY)
    big = len(dataset) > 400

    # kernels -------------------------------------------------------------
    pts = rng.uniform(-1.0, 1.0, size=(40, dataset.feature_dim))
    sym = max(abs(kernel(a, b) - kernel(b, a))
              for a in pts[:10] for b in pts[10:20])
    add("kernel_symmetry", sym == 0.0, f"max asymmetry {sym:g}")
    rr = np.linspace(0.0, 10.0, 2001)
    prof = np.asarray(kernel.profile(rr))
    add("kernel_profile_monotone", bool(np.all(np.diff(prof) <= 1e-15)),
        "non-increasing on [0, 10]")

    # dataset structure ----------------------------------------------------
    cat = np.concatenate([dataset.targets[:, None], dataset.states], axis=1)
    feats_ok = np.array_equal(cat, dataset.features)
    n = dataset.order
    succ = dataset.succ_states
    sel_ok = (np.array_equal(succ[:, :n - 1], dataset.states[:, 1:n])
              and np.array_equal(succ[:, n:2 * n - 2], dataset.states[:, n + 1:])
              and np.array_equal(succ[:, -1], dataset.controls))
    add("dataset_feature_layout", feats_ok, "features = [target; state]")
    add("dataset_successor_shift", sel_ok, "successors are exact shifts")

    # interpolant ----------------------------------------------------------
    if model.lam == 0.0:
        resid = np.max(np.abs(model.predict(dataset.features) - dataset.controls))
        add("interpolation_exactness", resid <= 1e-8, f"max residual {resid:.2e}")
        sub = rng.choice(len(dataset), size=min(64, len(dataset)), replace=False)
        pw = np.max(model.power(dataset.features[sub]))
        add("power_function_at_data", pw <= 1e-3 * kernel.sigma_f,
            f"max power at data {pw:.2e}")
    else:
        add("interpolation_exactness", True,
            f"skipped (ridge fit, lambda={model.lam:g})")

    # bounds ---------------------------------------------------------------
    grid = np.logspace(-9, 3, 1000)
    names = [("interp_err", bounds.interp_err, False),
             ("input_dev", bounds.input_dev, True),
             ("state_dev", bounds.state_dev, True)]
    if cfg.delay == 1:
        names.append(("output_dev", bounds.output_dev, True))
    kinf_ok, kinf_detail = True, []
    for nm, fn, strict_all in names:
        vals = fn(grid)
        if strict_all:
            mono = bool(np.all(np.diff(vals) > 0))
        else:
            # class-K bounds may saturate at their supremum in float64;
            # demand strict growth below saturation, monotone overall
            live = vals < vals[-1] * (1.0 - 1e-12)
            mono = (bool(np.all(np.diff(vals[live]) > 0))
                    and bool(np.all(np.diff(vals) >= 0)))
        ok = fn(0.0) == 0.0 and mono
        kinf_ok = kinf_ok and ok
        if not ok:
            kinf_detail.append(nm)
    add("bounds_class_k", kinf_ok,
        "zero at zero, strictly increasing" if kinf_ok
        else f"violated by {kinf_detail}")
    rs = np.logspace(-6, 3, 100)
    back = bounds.state_dev(bounds.state_dev_inv(rs))
    inv_err = np.max(np.abs(back - rs) / np.maximum(1.0, rs))
    add("bounds_inversion", inv_err <= 1e-9, f"max relative error {inv_err:.2e}")

    # oracle-backed deviation bounds ----------------------------------------
    if cfg.plant == "numerical":
        box = plant.state_box()
        viol_u = viol_y = viol_g = skipped = 0
        for _ in range(1000):
            i = int(rng.integers(len(dataset)))
            z = rng.uniform(box[:, 0], box[:, 1])
            eps = float(np.linalg.norm(dataset.states[i] - z))
            u_hat = model.predict(np.concatenate([[dataset.targets[i]], z]))
            if abs(dataset.controls[i] - u_hat) > bounds.input_dev(eps) + 1e-9:
                viol_u += 1
            if not plant.input_feasible(z, u_hat):
                skipped += 1
                continue
            y_act = plant.step(z, u_hat)
            if abs(dataset.targets[i] - y_act) > bounds.output_dev(eps) + 1e-9:
                viol_y += 1
            _, z_next = plant.advance(z, u_hat)
            gap = float(np.linalg.norm(dataset.succ_states[i] - z_next))
            if gap > bounds.state_dev(eps) + 1e-9:
                viol_g += 1
        add("bound_validity_oracle", viol_u + viol_y + viol_g == 0,
            f"violations u/y/state {viol_u}/{viol_y}/{viol_g}, "
            f"{skipped} infeasible-pair skips of 1000")
    else:
        lip_f, lip_c = plant.lipschitz_bounds()
        hon = pipeline.make_bounds(cfg, kernel)
        viol = 0
        lo = dataset.states.min(axis=0) - 0.05 * np.abs(dataset.states).max(axis=0)
        hi = dataset.states.max(axis=0) + 0.05 * np.abs(dataset.states).max(axis=0)
        for _ in range(1000):
            i = int(rng.integers(len(dataset)))
            z = rng.uniform(lo, hi)
            eps = float(np.linalg.norm(dataset.states[i] - z))
            u_hat = model.predict(np.concatenate([[dataset.targets[i]], z]))
            if abs(dataset.controls[i] - u_hat) > hon.input_dev(eps) + 1e-9:
                viol += 1
            y1, z_next = plant.advance(z, u_hat)
            gap = float(np.linalg.norm(dataset.succ_states[i] - z_next))
            lim = hon.input_dev(eps) + (1.0 + cfg.lip_f) * eps
            if gap > lim + 1e-9:
                viol += 1
        add("bound_validity_oracle", viol == 0,
            f"{viol} violations over 1000 delayed-map samples")

    # level families ---------------------------------------------------------
    neg = slab_bad = cert_bad = None
    for fam in controller.families:
        for j, e in enumerate(fam.levels):
            if len(e) == 0:
                continue
            if np.any(e.inradius <= 0):
                i = int(e.idx[np.argmin(e.inradius)])
                neg = (fam.delta, j, i, float(e.inradius.min()))
            if j == 0:
                margin = (np.abs(dataset.succ_states[e.idx, dataset.order - 1])
                          + e.inradius)
                if np.any(margin > fam.delta + 1e-12):
                    k = int(np.argmax(margin))
                    slab_bad = (fam.delta, int(e.idx[k]), float(margin[k]))
            gap = bounds.state_dev(e.cert_radius) - e.inradius
            if np.any(gap > 1e-9):
                k = int(np.argmax(gap))
                cert_bad = (fam.delta, j, int(e.idx[k]), float(gap[k]))
    add("family_positive_radii", neg is None,
        "all entry inradii positive" if neg is None
        else f"delta={neg[0]:g} level={neg[1]} record={neg[2]} r={neg[3]:g}")
    add("family_slab_soundness", slab_bad is None,
        "level-0 balls inside the output slab" if slab_bad is None
        else f"delta={slab_bad[0]:g} record={slab_bad[1]} reach={slab_bad[2]:g}")
    add("family_certificate_consistency", cert_bad is None,
        "state_dev(cert_radius) <= inradius + 1e-9" if cert_bad is None
        else f"delta={cert_bad[0]:g} level={cert_bad[1]} record={cert_bad[2]}")

    per_level = None if not big else 8
    samples = 200 if not big else 50
    fail = None
    for fam in controller.families:
        for j in range(1, len(fam.levels)):
            e = fam.levels[j]
            if len(e) == 0:
                continue
            take = (np.arange(len(e)) if per_level is None else
                    np.unique(np.linspace(0, len(e) - 1, per_level).astype(int)))
            centers, radii = fam.dataset.succ_states[e.idx[take]], e.inradius[take]
            prev_c, prev_r = fam.centers_radii(j - 1)
            for c, r, rec in zip(centers, radii, e.idx[take]):
                pts = _sample_in_ball(rng, c, r, samples)
                d = np.linalg.norm(pts[:, None, :] - prev_c[None, :, :], axis=2)
                inside = (d <= prev_r[None, :]).any(axis=1)
                if not np.all(inside):
                    fail = (fam.delta, j, int(rec))
                    break
            if fail:
                break
        if fail:
            break
    add("family_recursion_soundness", fail is None,
        f"{samples} samples/entry"
        + ("" if per_level is None else f", {per_level} entries/level")
        + ("" if fail is None
           else f"; escape at delta={fail[0]:g} level={fail[1]} record={fail[2]}"))

    nest = ", ".join(
        f"{fam.delta:g}:{'yes' if check_nesting(fam) else 'unverified'}"
        for fam in controller.families)
    add("family_nesting_status", True, nest)

    # run logs ----------------------------------------------------------------
    paths = pipeline._paths(cfg)
    if os.path.exists(paths["summary"]):
        ok = pipeline.cmd_report(cfg, log=lambda *_: None)
        add("rmse_recompute", ok, "summary matches recomputed metric")

    return checks
