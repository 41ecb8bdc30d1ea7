"""Command-line front end: every analysis as a subcommand with file artifacts.

Exit codes: 0 success, 2 domain errors (no solution, not in island, ...),
1 usage errors.  All JSON artifacts embed the resolved configuration so a
run can be reproduced from its outputs alone.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import classify as _classify
from . import integrate as _integrate
from . import limits as _limits
from . import manifold as _manifold
from . import phase, simulate, systems
from .errors import OpqError

CSV_FMT = "%.17g"


class UsageError(Exception):
    """Missing or inconsistent arguments after config merging (exit 1)."""


def _require(args, *names):
    """Options that may come from a config file are validated post-merge."""
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError("missing required arguments: "
                         + ", ".join("--" + n for n in missing))


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _add_system_args(p):
    p.add_argument("--system", choices=["two_observable", "driven_z"])
    p.add_argument("--tau-x", type=float)
    p.add_argument("--tau-z", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--delta", type=float)


def _add_common_args(p):
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", help="JSON config file; CLI flags take precedence")


def _load_config(args):
    """Config precedence: CLI flags over JSON file over defaults."""
    if not args.config:
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    known = set(vars(args))
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest == "system" and isinstance(val, dict):
            spec = systems.spec_from_json(val)
            if args.system is None:
                args.system = spec.kind
                for f in ("tau_x", "tau_z", "tau", "delta"):
                    if hasattr(spec, f) and getattr(args, f, None) is None:
                        setattr(args, f, getattr(spec, f))
            continue
        if dest not in known:
            raise OpqError(f"unknown config key {key!r}")
        if getattr(args, dest) in (None, False):
            setattr(args, dest, val)


def _system(args):
    if args.system == "two_observable":
        if args.tau_x is None or args.tau_z is None:
            raise OpqError("two_observable needs --tau-x and --tau-z")
        return systems.TwoObservable(tau_x=args.tau_x, tau_z=args.tau_z)
    if args.system == "driven_z":
        if args.tau is None or args.delta is None:
            raise OpqError("driven_z needs --tau and --delta")
        return systems.DrivenZ(tau=args.tau, delta=args.delta)
    raise OpqError("--system is required")

def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, columns):
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=header,
               comments="", fmt=CSV_FMT, newline="\n")


def _resolved(args, **extra):
    spec = _system(args)
    out = {"system": spec.to_json(), "seed": args.seed}
    out.update(extra)
    return out


def _default_island_range(spec, theta_i):
    """Full island momentum range at theta_i, shrunk off the separatrix."""
    isl = phase.island_spec(spec)
    p_hi, p_lo = phase.p_branches(spec, theta_i, isl.E_c)
    return min(p_lo, p_hi) + 1e-9, max(p_lo, p_hi) - 1e-9


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_portrait(args):
    spec = _system(args)
    out = _out_dir(args)
    n_th, n_p, n_e = args.n_theta, args.n_p, args.n_energies
    theta = np.linspace(0.0, 2.0 * np.pi, n_th)

    if spec.kind == "two_observable":
        try:
            isl = phase.island_spec(spec)
            E_lo, E_hi = isl.E_m, -isl.E_m
        except OpqError:
            E_lo, E_hi = -0.5 / spec.tau_x, 0.5 / spec.tau_x
        meta = {"island": None}
        try:
            isl = phase.island_spec(spec)
            meta["island"] = {"E_c": isl.E_c, "E_m": isl.E_m,
                              "center_theta": isl.center_theta,
                              "hyperbolic_theta": isl.hyperbolic_theta}
        except OpqError:
            pass
    else:
        E_star = phase.driven_separatrix_energy(spec)
        E_lo, E_hi = 2.0 * E_star, -2.0 * E_star if E_star != 0 else 1.0
        th_bar, p_bar = phase.driven_fixed_point(spec)
        meta = {"fixed_point": [th_bar, p_bar], "E_star": E_star}

    rows = []
    for E in np.linspace(E_lo, E_hi, n_e):
        for th in theta:
            try:
                pp, pm = phase.p_branches(spec, th, E)
            except OpqError:
                continue
            rows.append((E, th, pp))
            rows.append((E, th, pm))
    rows = np.array(rows)
    _write_csv(out / "portrait_contours.csv", "E,theta,p",
               [rows[:, 0], rows[:, 1], rows[:, 2]])

    p_grid = np.linspace(-args.p_max, args.p_max, n_p)
    sd = phase.sdot_grid(spec, theta, p_grid)
    TH, P = np.meshgrid(theta, p_grid, indexing="ij")
    _write_csv(out / "sdot_grid.csv", "theta,p,sdot",
               [TH.ravel(), P.ravel(), sd.ravel()])
    _write_json(out / "portrait.json", _resolved(
        args, n_theta=n_th, n_p=n_p, n_energies=n_e, **meta))
    return 0


def _cmd_periods(args):
    spec = _system(args)
    out = _out_dir(args)
    if spec.kind == "two_observable" and not args.scan_2pi:
        isl = phase.island_spec(spec)
        pad = (isl.E_c - isl.E_m) * 1e-3
        E = np.linspace(isl.E_m + pad, isl.E_c - pad, args.n_energies)
        T = np.array([phase.island_period(spec, e) for e in E])
        _write_csv(out / "periods.csv", "E,period", [E, T])
        _write_json(out / "periods.json", _resolved(
            args, n_energies=args.n_energies, E_c=isl.E_c, E_m=isl.E_m))
        return 0
    # co-rotating one-turn scan (driven system, or --scan-2pi)
    if spec.kind == "driven_z":
        E_floor = phase.driven_separatrix_energy(spec)
    else:
        E_floor = -phase.island_spec(spec).E_m  # above every island
    E = np.linspace(E_floor + abs(E_floor) * 1e-2 + 1e-9,
                    args.e_max, args.n_energies)
    rows = phase.scan_T2pi_and_S(spec, E)
    _write_csv(out / "scan_2pi.csv", "E,T_2pi,S",
               [rows[:, 0], rows[:, 1], rows[:, 2]])
    _write_json(out / "scan_2pi.json", _resolved(
        args, n_energies=args.n_energies, e_max=args.e_max))
    return 0


def _cmd_onset(args):
    _require(args, "theta-i")
    spec = _system(args)
    out = _out_dir(args)
    onset = _manifold.caustic_onset(spec, args.theta_i)
    payload = _resolved(args, theta_i=args.theta_i, onset=onset,
                        tangency_energy=_manifold.tangency_energy(spec, args.theta_i))
    _write_json(out / "onset.json", payload)
    print(f"caustic onset: {onset:.6g} us")
    return 0


def _cmd_manifold(args):
    _require(args, "theta-i", "t")
    spec = _system(args)
    out = _out_dir(args)
    p_lo, p_hi = _p_range(args, spec)
    for t in args.t:
        snap = _manifold.evolve_manifold(spec, args.theta_i, (p_lo, p_hi), t)
        snap.to_csv(out / f"manifold_t{t:g}.csv")
    _write_json(out / "manifold.json", _resolved(
        args, theta_i=args.theta_i, times=list(args.t),
        p_range=[p_lo, p_hi]))
    return 0


def _p_range(args, spec):
    if args.p_min is not None and args.p_max is not None:
        return args.p_min, args.p_max
    if spec.kind == "two_observable":
        return _default_island_range(spec, args.theta_i)
    raise OpqError("driven_z needs an explicit --p-min / --p-max range")


def _cmd_multipath(args):
    _require(args, "theta-i", "theta-f", "t")
    spec = _system(args)
    out = _out_dir(args)
    p_lo, p_hi = _p_range(args, spec)
    sol = _manifold.find_multipaths(spec, args.theta_i, args.theta_f, args.t,
                                    (p_lo, p_hi), max_winding=args.max_winding)
    payload = sol.to_json()
    payload["seed"] = args.seed
    payload["p_range"] = [p_lo, p_hi]
    for i, b in enumerate(sol.branches):
        name = f"branch_{i}.csv"
        b.path.to_csv(out / name)
        payload["branches"][i]["path_csv"] = name
    _write_json(out / "multipath.json", payload)
    kinds = ",".join(b.kind for b in sol.branches)
    print(f"{len(sol.branches)} branches ({kinds})")
    return 0


def _cmd_classify(args):
    _require(args, "theta-i", "p-i", "t")
    spec = _system(args)
    out = _out_dir(args)
    path = _integrate.integrate(spec, args.theta_i, args.p_i, args.t)
    rep = _classify.classify(path)
    payload = _resolved(args, theta_i=args.theta_i, p_i=args.p_i, T=args.t,
                        S=float(path.S[-1]), energy=path.energy,
                        delta2_sine=rep.delta2_sine,
                        delta2_poly=rep.delta2_poly, kind=rep.kind)
    _write_json(out / "classify.json", payload)
    print(f"{rep.kind}  S = {path.S[-1]:.6g}  "
          f"d2S = ({rep.delta2_sine:.4g}, {rep.delta2_poly:.4g})")
    return 0


def _cmd_simulate(args):
    _require(args, "theta-i", "t-final")
    spec = _system(args)
    out = _out_dir(args)
    cfg = simulate.SimConfig(system=spec, theta_i=args.theta_i,
                             t_final=args.t_final, n_trajectories=args.n,
                             seed=args.seed, dt=args.dt,
                             formulation=args.formulation,
                             n_store=args.n_store)
    ens = simulate.simulate_ensemble(cfg)
    ens.to_csv(out / "ensemble.csv", decimate=args.decimate)
    _write_json(out / "ensemble.json",
                {"config": cfg.to_json(), "purity_max_dev": ens.purity_max_dev,
                 "decimate": args.decimate})
    return 0


def _load_ensemble_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    ids = data[:, 0].astype(int)
    uniq = np.unique(ids)
    t = data[ids == uniq[0], 1]
    theta = np.vstack([data[ids == i, 2] for i in uniq])
    return t, theta, uniq


def _cmd_densify(args):
    _require(args, "ensemble")
    out = _out_dir(args)
    t, theta, ids = _load_ensemble_csv(args.ensemble)
    ens = simulate.Ensemble(config=None, t=t, theta=theta,
                            final_bloch=np.zeros((theta.shape[0], 3)),
                            traj_ids=ids, purity_max_dev=0.0)
    if args.theta_f is not None:
        ens = simulate.postselect(ens, args.theta_f, args.t, args.tol_theta)
    hist = simulate.density_histogram(ens, args.time_bins, args.theta_bins)
    hist.to_csv(out / "density.csv")
    meta = hist.meta_json()
    meta["source"] = str(args.ensemble)
    meta["postselect"] = (None if args.theta_f is None else
                          {"theta_f": args.theta_f, "T": args.t,
                           "tol_theta": args.tol_theta,
                           "fraction": ens.selection_fraction})
    _write_json(out / "density.json", meta)
    return 0


def _cmd_limits(args):
    _require(args, "delta", "tau", "theta-i", "theta-f")
    out = _out_dir(args)
    rows = [("rabi_time_approx",
             _limits.rabi_time_approx(args.delta, args.tau,
                                      args.theta_i, args.theta_f)),
            ("rabi_action_A",
             _limits.rabi_action_A(args.delta, args.tau,
                                   args.theta_i, args.theta_f))]
    try:
        rows.append(("rabi_action_C",
                     _limits.rabi_action_C(args.delta, args.tau,
                                           args.theta_f, args.theta_i)))
    except OpqError:
        rows.append(("rabi_action_C", np.nan))
    with open(out / "limits.csv", "w", newline="\n") as fh:
        fh.write("quantity,value\n")
        for name, val in rows:
            fh.write(f"{name},{val:.17g}\n")
    if args.wg_t is not None:
        grid = np.linspace(0.0, 2.0 * np.pi, args.wg_points)
        P = _limits.wrapped_gaussian(args.theta_i, args.tau, args.wg_t, grid)
        _write_csv(out / "wrapped_gaussian.csv", "theta,density", [grid, P])
    return 0


# ---------------------------------------------------------------------------
# verify: built-in golden-value suite
# ---------------------------------------------------------------------------

def _cmd_verify(args):
    checks = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    xz = systems.TwoObservable(tau_x=1.0, tau_z=2.0)
    dz = systems.DrivenZ(tau=1.0, delta=1.0)
    theta_i = np.pi - 0.5

    isl = phase.island_spec(xz)
    check("island energies (Table 1)",
          isl.E_c == -0.25 and isl.E_m == -0.5,
          f"E_c={isl.E_c} E_m={isl.E_m}")
    th_bar, p_bar = phase.driven_fixed_point(dz)
    check("driven fixed point",
          abs(th_bar - np.arctan(1.0)) < 1e-15 and p_bar == -1.0,
          f"({th_bar:.6f}, {p_bar})")
    check("separatrix energy", phase.driven_separatrix_energy(dz) == -0.5)

    onset = _manifold.caustic_onset(xz, theta_i)
    check("caustic onset 6.32 +- 0.05", abs(onset - 6.32) <= 0.05,
          f"{onset:.4f}")

    p_lo, p_hi = _default_island_range(xz, theta_i)
    table = {9.0: [-0.44247943, 0.10592792, 0.90882604],
             18.0: [-0.46340433, -0.44816125, 0.12631625, 0.89614502,
                    0.93875909],
             27.0: [-0.46343702, -0.46284337, -0.43987448, -0.33363249,
                    0.91225871, 0.93735002, 0.93880374]}
    sols = {}
    for T, expect in table.items():
        sol = _manifold.find_multipaths(xz, theta_i, 3.5, T, (p_lo, p_hi))
        sols[T] = sol
        got = [b.p_i for b in sol.branches]
        ok = (len(got) == len(expect)
              and max(abs(g - e) for g, e in zip(got, expect)) <= 1e-3)
        check(f"multipath roots T={T:g}", ok,
              f"{len(got)} roots")
    kinds9 = [b.kind for b in sols[9.0].branches]
    check("classification T=9", kinds9 == ["MLP", "LLP", "MLP"],
          ",".join(kinds9))
    w9 = 100.0 * _manifold.branch_weights(sols[9.0])
    check("weights T=9 (Path % 1)",
          np.allclose(w9, [41.4, 24.4, 34.2], atol=0.5),
          "/".join(f"{w:.1f}" for w in w9))

    th0, _ = _manifold.most_likely_final(dz, np.pi / 2, 8.0, (1e-4, 2.0))
    check("most likely theta_T 9.90 +- 0.02", abs(th0 - 9.90) <= 0.02,
          f"{th0:.4f}")
    solw = _manifold.find_multipaths(dz, np.pi / 2, 5.75, 8.0, (1e-4, 3.0))
    Sw = [b.S for b in solw.branches]
    check("winding actions", len(Sw) == 3 and
          np.allclose(Sw, [-2.82, -2.94, -15.68], atol=0.02),
          "/".join(f"{s:.3f}" for s in Sw))
    ww = _manifold.branch_weights(solw)
    check("winding weights 0.53/0.47",
          np.allclose(ww[:2], [0.53, 0.47], atol=0.01),
          f"{ww[0]:.3f}/{ww[1]:.3f}")
    check("third winding weight ~1.38e-6",
          0.5 * 1.38e-6 <= ww[2] <= 2.0 * 1.38e-6, f"{ww[2]:.3g}")

    # E = 0 optimality of the one-turn action
    for tau in (0.5, 1.0, 2.0):
        spec = systems.DrivenZ(tau=tau, delta=1.0)
        E = np.linspace(-0.2, 0.2, 50)
        S = [phase.one_turn_time_and_action(spec, e)[1] for e in E]
        Eopt = E[int(np.argmax(S))]
        check(f"E=0 optimality tau={tau:g}",
              abs(Eopt) <= E[1] - E[0], f"E*={Eopt:.4f}")

    width = max(len(n) for n, _, _ in checks) + 2
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"{name:<{width}} {status}  {detail}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 2


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="opq", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("portrait", parents=[], help="phase-portrait data")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--n-theta", type=int, default=400)
    sp.add_argument("--n-p", type=int, default=200)
    sp.add_argument("--n-energies", type=int, default=24)
    sp.add_argument("--p-max", type=float, default=3.0)
    sp.set_defaults(func=_cmd_portrait)

    sp = sub.add_parser("periods", help="island periods / one-turn scans")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--n-energies", type=int, default=50)
    sp.add_argument("--e-max", type=float, default=2.0)
    sp.add_argument("--scan-2pi", action="store_true")
    sp.set_defaults(func=_cmd_periods)

    sp = sub.add_parser("onset", help="caustic onset time")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--theta-i", type=float)
    sp.set_defaults(func=_cmd_onset)

    sp = sub.add_parser("manifold", help="evolved manifold snapshots")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--theta-i", type=float)
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--p-min", type=float)
    sp.add_argument("--p-max", type=float)
    sp.set_defaults(func=_cmd_manifold)

    sp = sub.add_parser("multipath", help="boundary-value multipath solve")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--theta-i", type=float)
    sp.add_argument("--theta-f", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--p-min", type=float)
    sp.add_argument("--p-max", type=float)
    sp.add_argument("--max-winding", type=int, default=6)
    sp.set_defaults(func=_cmd_multipath)

    sp = sub.add_parser("classify", help="second-variation classification")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--theta-i", type=float)
    sp.add_argument("--p-i", type=float)
    sp.add_argument("--t", type=float)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("simulate", help="stochastic trajectory ensemble")
    _add_system_args(sp)
    _add_common_args(sp)
    sp.add_argument("--theta-i", type=float)
    sp.add_argument("--t-final", type=float)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--dt", type=float, default=simulate.DEFAULT_DT)
    sp.add_argument("--formulation", choices=list(simulate.FORMULATIONS),
                    default="bayesian_stratonovich")
    sp.add_argument("--n-store", type=int, default=simulate.DEFAULT_N_STORE)
    sp.add_argument("--decimate", type=int, default=1)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("densify", help="post-select and histogram an ensemble")
    _add_common_args(sp)
    sp.add_argument("--ensemble")
    sp.add_argument("--theta-f", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--tol-theta", type=float,
                    default=simulate.DEFAULT_TOL_THETA)
    sp.add_argument("--time-bins", type=int, default=60)
    sp.add_argument("--theta-bins", type=int, default=60)
    sp.set_defaults(func=_cmd_densify)

    sp = sub.add_parser("limits", help="diffusive-Rabi closed forms")
    _add_common_args(sp)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--theta-i", type=float)
    sp.add_argument("--theta-f", type=float)
    sp.add_argument("--wg-t", type=float)
    sp.add_argument("--wg-points", type=int, default=721)
    sp.set_defaults(func=_cmd_limits)

    sp = sub.add_parser("verify", help="golden-value pass/fail table")
    _add_common_args(sp)
    sp.set_defaults(func=_cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _load_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OpqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
