"""Command-line driver: ``faddeev {bound,scatter,scan,defects}``.

Diagnostics go to stderr as JSON lines and, for runs that write output, to
``diagnostics.jsonl`` in the output directory. Every output directory gets
the resolved configuration (``resolved_config.ini``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .extraction import cm_to_elab, elab_to_cm, scatter_energy
from .kinematics import tau_factors
from .sanalysis import DefectReport, load_smatrix, write_scan_csv
from .solver import ClosedChannelError, ConvergenceError
from .twobody import bound_state_basis, solve_bound_states

log = logging.getLogger("faddeev")


class JsonLines(logging.Formatter):
    """One JSON object per record; messages that are JSON objects are merged in."""

    def format(self, record: logging.LogRecord) -> str:
        out = {"level": record.levelname.lower(), "logger": record.name}
        msg = record.getMessage()
        try:
            body = json.loads(msg)
        except ValueError:
            body = None
        if isinstance(body, dict):
            out.update(body)
        else:
            out["message"] = msg
        if record.exc_info:
            out["error"] = self.formatException(record.exc_info).splitlines()[-1]
        return json.dumps(out)


def _configure_logging(verbose: int, out_dir: Path | None = None) -> None:
    root = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
    root.setLevel(logging.DEBUG if verbose > 1 else logging.INFO)
    err = logging.StreamHandler(sys.stderr)
    err.setLevel(logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING)
    err.setFormatter(JsonLines())
    root.addHandler(err)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(out_dir / "diagnostics.jsonl", mode="w", encoding="utf-8")
        fh.setLevel(logging.INFO)
        fh.setFormatter(JsonLines())
        root.addHandler(fh)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "incoming", None):
        cfg.incoming = tuple(s.strip() for item in args.incoming for s in item.split(",") if s.strip())
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    cfg.validate()
    return cfg


def cmd_bound(cfg: RunConfig) -> int:
    """Two-body bound states of every channel potential."""
    tau_x, _ = tau_factors(cfg.mass_system, 1)
    basis = bound_state_basis(cfg.solve.bound_r_max_fm, tau_x, cfg.solve.bound_intervals)
    report = []
    for ch, (label, pot) in enumerate((("singlet", cfg.singlet), ("triplet", cfg.triplet))):
        states = solve_bound_states(pot, 0, basis, tau_x)
        energies = [float(s.energy) for s in states]
        report.append({"channel": ch, "name": label, "energies_MeV": energies})
        if energies:
            print(f"channel {ch} ({label}): " + ", ".join(f"E = {e:.7f} MeV" for e in energies))
        else:
            print(f"channel {ch} ({label}): no bound state")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bound.json").write_text(json.dumps({"bound_states": report}, indent=1) + "\n", encoding="utf-8")
    cfg.write(out)
    return 0


def _cm_energies(cfg: RunConfig, E_d: float, energy=None, elab=None) -> list[float]:
    if energy is not None:
        return [float(energy)]
    if elab is not None:
        return [float(elab_to_cm(elab, E_d))]
    es = cfg.energy_list()
    if cfg.frame == "lab":
        es = [float(elab_to_cm(e, E_d)) for e in es]
    return es


def _check_open(E: float, E_d: float, incoming) -> None:
    if E <= E_d:
        raise ClosedChannelError(f"E = {E} MeV is at or below the (1+2) threshold {E_d:.6f} MeV")
    if E == 0:
        raise ClosedChannelError("E = 0 (breakup threshold) is not supported")
    if E < 0 and any(s.startswith("nnp:") for s in incoming):
        raise ClosedChannelError(f"the (1+1+1) channel is closed at E = {E} MeV; use --incoming nd")


def _summary(res) -> dict:
    rec = {"E": res.E, "E_lab": res.E_lab, "re_S11": res.S11.real, "im_S11": res.S11.imag,
           "abs_S11": abs(res.S11)}
    if res.defects is not None:
        rec.update(eta_U=res.defects.eta_U, eta_R=res.defects.eta_R)
    return rec


def cmd_scatter(cfg: RunConfig, energy=None, elab=None) -> int:
    """Solve the requested incoming states at each energy and write S-matrix JSON and breakup CSV."""
    setup = cfg.setup()
    E_d = setup.deuteron.energy
    energies = _cm_energies(cfg, E_d, energy, elab)
    if not energies:
        raise ConfigError("no energy given (use --energy, --elab or [run] energies)")
    out = Path(cfg.out)
    cfg.write(out)
    for E in energies:
        _check_open(E, E_d, cfg.incoming)
        res = scatter_energy(setup, E, cfg.incoming, cfg.fit)
        paths = res.write(out)
        rec = _summary(res)
        log.info(json.dumps({"event": "scatter", **rec, "files": [p.name for p in paths]}))
        line = f"E = {E:.6f} MeV (E_lab = {res.E_lab:.6f}): S11 = {res.S11.real:.8f}{res.S11.imag:+.8f}i"
        if res.defects is not None:
            line += f", eta_U = {res.defects.eta_U:.3e}, eta_R = {res.defects.eta_R:.3e}"
        print(line)
    return 0


_WORKER: dict = {}


def _scan_init(cfg: RunConfig) -> None:
    _WORKER["cfg"] = cfg
    _WORKER["setup"] = cfg.setup()


def _scan_one(E: float) -> dict:
    cfg, setup = _WORKER["cfg"], _WORKER["setup"]
    incoming = tuple(s for s in cfg.incoming if E > 0 or s == "nd") or ("nd",)
    try:
        res = scatter_energy(setup, E, incoming, cfg.fit)
        res.write(Path(cfg.out) / "energies")
        return {**_summary(res), "status": "ok"}
    except (ConvergenceError, ClosedChannelError, ArithmeticError, ValueError) as exc:
        return {"E": E, "E_lab": float(cm_to_elab(E, setup.deuteron.energy)), "status": f"failed: {exc}"}


def cmd_scan(cfg: RunConfig, grid=None) -> int:
    """Energy scan; failures are logged and the scan continues."""
    if grid is not None:
        cfg.scan, cfg.energies = tuple(grid), ()
    if not cfg.energy_list():
        raise ConfigError("no scan range given (use --range or [run] scan)")
    out = Path(cfg.out)
    cfg.write(out)
    _scan_init(cfg)
    E_d = _WORKER["setup"].deuteron.energy
    energies = []
    for E in _cm_energies(cfg, E_d):
        if E == 0 or E <= E_d:
            log.warning(json.dumps({"event": "skip", "E": E, "reason": "threshold or closed channel"}))
            continue
        energies.append(E)
    if cfg.workers > 1 and len(energies) > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_scan_init, initargs=(cfg,)) as pool:
            records = list(pool.map(_scan_one, energies))
    else:
        records = [_scan_one(E) for E in energies]
    for rec in records:
        level = logging.INFO if rec["status"] == "ok" else logging.ERROR
        log.log(level, json.dumps({"event": "scan", **rec}))
    write_scan_csv(out / "scan.csv", records)
    failed = sum(r["status"] != "ok" for r in records)
    print(f"scan: {len(records) - failed} of {len(records)} energies ok -> {out / 'scan.csv'}")
    return 0


def cmd_defects(paths, out=None) -> int:
    """Recompute the defects from stored S-matrix files."""
    first = None
    rows = []
    for p in map(Path, paths):
        S = load_smatrix(p)
        if S.quad is not None:
            if first is not None and not first.compatible(S.quad):
                raise ValueError(f"{p}: alpha grid differs from the first file's")
            first = first or S.quad
        rep = DefectReport.of(S)
        data = json.loads(p.read_text(encoding="utf-8"))
        rec = {"file": p.name, "E": data.get("E"), **rep.to_json()}
        stored = data.get("defects")
        if stored:
            rec["delta_eta_U"] = abs(rep.eta_U - stored["eta_U"])
            rec["delta_eta_R"] = abs(rep.eta_R - stored["eta_R"])
        dest = Path(out) if out else p.parent
        dest.mkdir(parents=True, exist_ok=True)
        (dest / f"defects_{p.stem}.json").write_text(json.dumps(rec, indent=1) + "\n", encoding="utf-8")
        rows.append({"E": data.get("E"), "eta_U": rep.eta_U, "eta_R": rep.eta_R, "file": p.name})
        print(f"{p.name}: eta_U = {rep.eta_U:.6e}, eta_R = {rep.eta_R:.6e}")
    if out and len(rows) > 1:
        write_scan_csv(Path(out) / "defects.csv", rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="faddeev", description="Configuration-space Faddeev solver for nd scattering")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", metavar="PATH", help="INI run configuration")
        if out:
            p.add_argument("--out", metavar="DIR", help="output directory (overrides [run] out)")
        p.add_argument("-v", "--verbose", action="count", default=0, help="JSON-lines diagnostics on stderr")

    common(sub.add_parser("bound", help="two-body bound states per channel"))
    sc = sub.add_parser("scatter", help="S-matrix at given energies")
    common(sc)
    g = sc.add_mutually_exclusive_group()
    g.add_argument("--energy", type=float, metavar="MEV", help="center-of-mass energy")
    g.add_argument("--elab", type=float, metavar="MEV", help="neutron lab energy")
    sc.add_argument("--incoming", action="append", metavar="SEL", help="nd or nnp:n (repeatable or comma list)")
    sn = sub.add_parser("scan", help="energy scan to CSV")
    common(sn)
    sn.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "STEP"), dest="grid")
    sn.add_argument("--incoming", action="append", metavar="SEL")
    sn.add_argument("--workers", type=int, metavar="N")
    df = sub.add_parser("defects", help="recompute defects from S-matrix files")
    df.add_argument("files", nargs="+", metavar="FILE")
    df.add_argument("--out", metavar="DIR")
    df.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "defects":
            _configure_logging(args.verbose)
            return cmd_defects(args.files, args.out)
        cfg = _load_config(args)
        _configure_logging(args.verbose, Path(cfg.out))
        if args.command == "bound":
            return cmd_bound(cfg)
        if args.command == "scatter":
            return cmd_scatter(cfg, args.energy, args.elab)
        return cmd_scan(cfg, args.grid)
    except ConfigError as exc:
        print(f"faddeev: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ClosedChannelError, ConvergenceError, ValueError, OSError) as exc:
        print(f"faddeev: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
