"""Command-line surface. Every command prints one JSON report.

Exit codes: 0 success, 1 usage error, 2 domain error (a JSON error object is printed).
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

from . import io as cio
from .automaton import continuation_values
from .conventions import BuildError, build_folk_automaton, core_reversion_convention
from .game_core import TransferMode, all_coalitions, coalition_label, parse_coalition
from .io import DocumentError, coalition_doc, fmt_q, render_value, render_vector
from .minmax import coalitional_minmax, efficient_coalitional_minmax, individual_minmax
from .payoff_sets import (CharMode, beta_core_membership, characteristic_from_game,
                          feasible_membership_ntu, s_rational_membership, set_slack, stage_core,
                          strict_balanced_emptiness, tu_feasible_ir_membership)
from .simple_games import (SimpleGame, SimpleGameError, classify, core_membership, punishment_convention,
                           punishment_value, stationary_sustainable, u_delta_membership, veto_players)
from .simulate import ScriptError, run
from .stability import MeasurabilityError, coalition_value_guarantee_check, min_delta_certify, verify


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


# -- argument helpers ----------------------------------------------------------------

def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _csv(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _q(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad number {text!r}") from exc


def _coalitions(text: str | None, n: int) -> list[int]:
    """'1,2;1,3' -> masks."""
    if not text:
        return []
    try:
        return [parse_coalition(part if "," in part else part + ",", n) for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


class _Ctx:
    def __init__(self, args):
        self.args = args
        self.blobs: list[bytes] = []
        self.witnesses: list = []
        self._game = None

    def game(self):
        if self._game is None:
            if not self.args.game:
                raise UsageError("--game PATH is required")
            raw = _read(self.args.game)
            self.blobs.append(raw)
            self._game = cio.game_from_doc(cio.load_json(raw.decode("utf-8")))
        return self._game

    def delta(self, required=True):
        g, dflt = self.game() if self.args.game else (None, None)
        if getattr(self.args, "delta", None) is not None:
            d = _q(self.args.delta)
        else:
            d = dflt
        if d is None and required:
            raise UsageError("--delta is required (the game document has no delta)")
        if d is not None and not (0 <= d < 1):
            raise ValueError("delta must lie in [0, 1)")
        return d

    def doc(self, path):
        raw = _read(path)
        self.blobs.append(raw)
        return cio.load_json(raw.decode("utf-8"))


def _dnum(args, d: Fraction):
    """Delta as used by the verifier: exact with --exact, binary64 otherwise."""
    return d if getattr(args, "exact", False) else float(d)


def _alt(g, a):
    return {"index": a, "label": g.labels[a], "payoffs": render_vector(g.v(a))}


def _witness(g, aut, w):
    if w is None:
        return None
    out = {"state": aut.states[w.state].label, "coalition": coalition_doc(w.coalition),
           "alternative": g.labels[w.alternative], "gains": render_vector(w.gains)}
    if w.transfers is not None:
        out["transfers"] = [[fmt_q(x) if isinstance(x, Fraction) else repr(float(x)) for x in row]
                            for row in w.transfers]
    if w.successor is not None:
        out["successor"] = aut.states[w.successor].label
    return out


# -- commands --------------------------------------------------------------------------

def cmd_minmax(ctx, args):
    g, _ = ctx.game()
    if args.coalition:
        try:
            cs = [parse_coalition(args.coalition, g.n)]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        cs = list(all_coalitions(g.n))
    rows = []
    for C in cs:
        r, e = coalitional_minmax(g, C), efficient_coalitional_minmax(g, C)
        rows.append({"coalition": coalition_doc(C), "minmax": render_value(r.value),
                     "minimizer": g.labels[r.minimizer], "best_reply": g.labels[r.maximizer],
                     "efficient_minmax": render_value(e.value), "efficient_minimizer": g.labels[e.minimizer]})
    ind = [render_value(individual_minmax(g, i).value) for i in range(g.n)]
    return {"individual": ind, "coalitions": rows}


def cmd_core(ctx, args):
    g, _ = ctx.game()
    core = stage_core(g)
    return {"core": [_alt(g, a) for a in core], "empty": not core}


def cmd_sets(ctx, args):
    g, _ = ctx.game()
    kind = args.kind
    S = _coalitions(args.S, g.n)
    if kind == "srational" and not S:
        raise UsageError("--kind srational needs --S")
    res = {"kind": kind, "strict": args.strict}
    if args.point is not None:
        u = _csv(args.point)
        if len(u) != g.n:
            raise UsageError(f"--point needs {g.n} coordinates")
        if kind == "fir":
            member = (tu_feasible_ir_membership(g, u, args.strict) if g.is_tu
                      else feasible_membership_ntu(g, u, args.strict))
        elif kind in ("beta", "ebeta"):
            member = beta_core_membership(g, u, efficient=kind == "ebeta", strict=args.strict)
        else:
            sr = s_rational_membership(g, S, u, args.strict)
            member = sr.member
            res["failing"] = [coalition_doc(C) for C in sr.failing]
            res["individual_ir"] = list(sr.individual_ir)
        res.update({"point": render_vector(u), "member": member})
        return res
    if kind in ("beta", "ebeta") and args.strict:
        phi = characteristic_from_game(g, CharMode.EFFICIENT_BETA if kind == "ebeta" else CharMode.BETA)
        b = strict_balanced_emptiness(phi)
        res.update({"status": "NONEMPTY" if b.nonempty else "EMPTY", "balancing_optimum": render_value(b.optimum),
                    "grand_value": render_value(phi(g.N))})
        if not b.nonempty:
            ctx.witnesses.append({"lambda": [{"coalition": coalition_doc(C), "weight": render_value(w)}
                                             for C, w in sorted(b.weights.items())]})
        return res
    sl = set_slack(g, kind, S)
    ok = sl.strictly_nonempty if args.strict else sl.nonempty
    res["status"] = "NONEMPTY" if ok else "EMPTY"
    if sl.slack is not None:
        res["slack"] = render_value(sl.slack)
        if ok:
            res["point"] = render_vector(sl.point)
    return res


def _automaton_from(ctx, path, g):
    doc = ctx.doc(path)
    if isinstance(doc, dict) and "results" in doc and isinstance(doc["results"], dict) \
            and "automaton" in doc["results"]:
        doc = doc["results"]["automaton"]
    aut = cio.automaton_from_doc(doc)
    cio.check_automaton_against(aut, g)
    return aut


def cmd_build(ctx, args):
    g, _ = ctx.game()
    d = ctx.delta()
    target = _csv(args.target)
    if len(target) != g.n:
        raise UsageError(f"--target needs {g.n} coordinates")
    S = _coalitions(args.S, g.n) or sorted(g.secret_coalitions)
    kappa = _q(args.kappa) if args.kappa else None
    aut, params = build_folk_automaton(g, target, float(d), args.regime, S=S, kappa=kappa)
    V = continuation_values(aut, g, float(d))[aut.initial]
    summ = params.summary()
    doc = cio.automaton_to_doc(aut)
    if args.automaton_out:
        Path(args.automaton_out).write_text(cio.dumps(doc))
    return {"regime": args.regime, "delta": render_value(d), "target": render_vector(target),
            "states": len(aut.states), "verdict": "STABLE",
            "initial_value": render_vector(V),
            "parameters": {"kappa": render_value(summ["kappa"]), "L": summ["L"],
                           "eps": render_value(summ["eps"]),
                           "punishments": {k: render_vector(v) for k, v in summ["punishments"].items()},
                           "minmax_alternatives": {k: g.labels[v] for k, v in summ["minmax_alternatives"].items()},
                           "sequence_lengths": summ["sequence_lengths"]},
            "automaton": doc}


def cmd_verify(ctx, args):
    g, _ = ctx.game()
    aut = _automaton_from(ctx, args.automaton, g)
    d = ctx.delta()
    res = verify(aut, g, _dnum(args, d))
    out = {"delta": render_value(d), "states": len(aut.states), "verdict": res.verdict}
    if not res.stable:
        ctx.witnesses.append(_witness(g, aut, res.witness))
    if g.mode is TransferMode.TU_SECRET:
        gv = coalition_value_guarantee_check(aut, g, _dnum(args, d))
        out["coalition_guarantee"] = "OK" if gv is None else {
            "state": aut.states[gv.state].label, "coalition": coalition_doc(gv.coalition),
            "value": render_value(gv.value), "bound": render_value(gv.bound)}
    return out


def cmd_simulate(ctx, args):
    g, _ = ctx.game()
    aut = _automaton_from(ctx, args.automaton, g)
    d = ctx.delta()
    script = cio.script_from_doc(ctx.doc(args.script), g) if args.script else None
    rep = run(aut, g, float(d), script, args.horizon)
    path = []
    for t, (a, C, _) in enumerate(rep.outcomes):
        row = {"t": t, "state": rep.labels[t], "alternative": g.labels[a]}
        if C:
            row["block"] = coalition_doc(C)
        path.append(row)
    return {"delta": render_value(d), "horizon": rep.horizon, "payoff": render_vector(rep.payoff),
            "tail_bound": render_value(rep.tail_bound), "path": path}


def cmd_iterate(ctx, args):
    from .set_iteration import decompose_witness, iterate_fixed_point
    g, _ = ctx.game()
    d = ctx.delta()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = iterate_fixed_point(g, d, args.resolution, args.max_iter)
    F = res.fixed_point
    out = {"delta": render_value(d), "resolution": args.resolution, "iterations": res.iterations,
           "counts": res.counts, "left_initial_cover": res.warned, "members": F.count,
           "grid": {"origin": render_vector(F.origin), "step": render_vector(F.step)}}
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            F.to_csv(fh)
    if args.point is not None:
        v = _csv(args.point)
        if len(v) != g.n:
            raise UsageError(f"--point needs {g.n} coordinates")
        member = F.contains(v)
        out["point"] = {"payoffs": render_vector(v), "member": member}
        if member:
            wit = decompose_witness(g, d, F, v)
            if wit is not None:
                out["point"]["decomposition"] = {"alternative": g.labels[wit[0]],
                                                 "continuation": render_vector(wit[1])}
    return out


def _simple(ctx, args):
    if args.minimal:
        if not args.players:
            raise UsageError("--minimal needs --players")
        return SimpleGame.from_minimal(args.players, _coalitions(args.minimal, args.players)), None
    g, _ = ctx.game()
    return SimpleGame.from_stage_game(g), g


def cmd_simple(ctx, args):
    sg, g = _simple(ctx, args)
    op = args.op
    if op == "classify":
        c = classify(sg)
        return {"dictatorial": c.dictatorial, "collegial": c.collegial,
                "veto_players": coalition_doc(veto_players(sg)) if c.collegial else [],
                "minimal_winning": [coalition_doc(C) for C in sg.minimal_winning()]}
    if op in ("udelta", "core"):
        if args.point is None:
            raise UsageError(f"simple {op} needs --point")
        u = _csv(args.point)
        if op == "core":
            return {"point": render_vector(u), "core": core_membership(sg, u)}
        d = _q(args.delta) if args.delta is not None else None
        if d is None:
            raise UsageError("simple udelta needs --delta")
        out = {"point": render_vector(u), "delta": render_value(d), "member": u_delta_membership(sg, u, d)}
        try:
            out["stationary_sustainable"] = stationary_sustainable(sg, u, d)
        except SimpleGameError as exc:
            out["stationary_sustainable"] = None
            out["note"] = str(exc)
        return out
    if args.player is None:
        raise UsageError("simple punish needs --player")
    i = args.player - 1
    if not (0 <= i < sg.n):
        raise UsageError("--player out of range")
    aut = punishment_convention(sg, i, args.regime, g if g is not None and args.use_game else None)
    gg = aut.meta["game"]
    out = {"player": args.player, "regime": args.regime, "states": len(aut.states),
           "automaton": cio.automaton_to_doc(aut), "game": cio.game_to_doc(gg)}
    if args.delta is not None:
        d = _q(args.delta)
        res = verify(aut, gg, d if not gg.is_tu else float(d))
        out.update({"delta": render_value(d), "verdict": res.verdict,
                    "value": render_value(punishment_value(aut, d))})
        if not res.stable:
            ctx.witnesses.append(_witness(gg, aut, res.witness))
    return out


def cmd_mindelta(ctx, args):
    g, _ = ctx.game()
    grid = [float(x) for x in _csv(args.grid)]
    if args.regime == "core_reversion":
        if args.path is None or args.core is None:
            raise UsageError("core_reversion needs --path and --core")
        try:
            p, c = g.labels.index(args.path), g.labels.index(args.core)
        except ValueError as exc:
            raise UsageError(f"unknown alternative label: {exc}") from exc
        aut = core_reversion_convention(g, p, c)
        cert = min_delta_certify(lambda _d: aut, g, None, grid)
        target = g.v(p)
    else:
        if args.target is None:
            raise UsageError("--target is required for folk regimes")
        target = _csv(args.target)
        cert = min_delta_certify(args.regime, g, target, grid)
    return {"regime": args.regime, "target": render_vector(target),
            "table": [{"delta": repr(dl), "passed": ok, "note": note} for dl, ok, note in cert.table],
            "threshold": None if cert.threshold is None else repr(cert.threshold),
            "monotone": cert.monotone}


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coalconv", description="Stable conventions in coalitional repeated games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--game", help="game document (JSON)")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="append wall-clock timing to the report")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("minmax", cmd_minmax, "individual, coalitional and efficient minmaxes")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--coalition", help="players '1,2' or a bit mask")
    g.add_argument("--all", action="store_true", help="every coalition (default)")

    add("core", cmd_core, "stage core alternatives")

    sp = add("sets", cmd_sets, "payoff set membership or emptiness")
    sp.add_argument("--kind", required=True, choices=["fir", "beta", "ebeta", "srational"])
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--point", help="comma-separated payoff vector")
    sp.add_argument("--S", help="coalitions for srational, e.g. '1,2;1,3'")

    sp = add("build", cmd_build, "folk convention automaton")
    sp.add_argument("--target", required=True)
    sp.add_argument("--regime", required=True, choices=["ntu", "tupm", "tupt", "some"])
    sp.add_argument("--delta")
    sp.add_argument("--S", help="secret coalitions for the 'some' regime")
    sp.add_argument("--kappa", help="fix the punishment weight instead of searching")
    sp.add_argument("--automaton-out", help="also write the automaton document here")

    sp = add("verify", cmd_verify, "check a convention for profitable blocks")
    sp.add_argument("--automaton", required=True, help="automaton document or build report")
    sp.add_argument("--delta")
    sp.add_argument("--exact", action="store_true", help="exact rational delta")

    sp = add("simulate", cmd_simulate, "replay a convention against a deviation script")
    sp.add_argument("--automaton", required=True)
    sp.add_argument("--script")
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--delta")

    sp = add("iterate", cmd_iterate, "grid fixed point of the NTU set operator")
    sp.add_argument("--delta")
    sp.add_argument("--resolution", type=int, required=True)
    sp.add_argument("--dump", help="CSV of cell centers with membership")
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--point", help="report membership and a decomposition for this payoff")

    sp = add("simple", cmd_simple, "closed-form answers for simple games")
    sp.add_argument("op", choices=["classify", "udelta", "core", "punish"])
    sp.add_argument("--point")
    sp.add_argument("--delta")
    sp.add_argument("--player", type=int, help="1-based player to punish")
    sp.add_argument("--regime", default="ntu", choices=["ntu", "tupm"])
    sp.add_argument("--minimal", help="minimal winning coalitions '1,2;1,3' instead of --game")
    sp.add_argument("--players", type=int)
    sp.add_argument("--use-game", action="store_true", help="punish inside the --game game itself")

    sp = add("mindelta", cmd_mindelta, "build-and-verify table over a delta grid")
    sp.add_argument("--regime", required=True, choices=["ntu", "tupm", "tupt", "some", "core_reversion"])
    sp.add_argument("--target")
    sp.add_argument("--grid", required=True)
    sp.add_argument("--path", help="path alternative label (core_reversion)")
    sp.add_argument("--core", help="core alternative label (core_reversion)")
    return p


DOMAIN_ERRORS = (DocumentError, BuildError, SimpleGameError, ScriptError, MeasurabilityError,
                 ValueError, ArithmeticError, RuntimeError, IndexError, KeyError)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    ctx = _Ctx(args)
    t0 = time.perf_counter()
    try:
        results = args.fn(ctx, args)
    except UsageError as exc:
        sys.stderr.write(f"coalconv {args.command}: error: {exc}\n")
        return 1
    except DOMAIN_ERRORS as exc:
        err = {"format_version": cio.FORMAT_VERSION, "command": argv,
               "error": {"type": type(exc).__name__, "message": str(exc)}}
        _emit(cio.dumps(err), args.out)
        return 2
    timing = {"seconds": round(time.perf_counter() - t0, 3)} if args.timing else None
    _emit(cio.dumps(cio.make_report(argv, ctx.blobs, results, ctx.witnesses, timing)), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
