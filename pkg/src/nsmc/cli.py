"""Command-line front end: ``nsmc eval``, ``nsmc check``, ``nsmc reproduce-tables``.

Exit codes: 0 on success, 2 for malformed or invalid input, 3 when a
numerical hypothesis of the requested expansion fails.
"""
import argparse
import sys

import numpy as np

from . import chains, tables
from .cumulative import cumulative_first, exact_cumulative
from .discounted import (DiscountSpec, exact_truncated, first_order_linear,
                         second_order_linear, second_order_terms, stationary_value)
from .errors import (CalibrationError, HorizonExceeded, NotContracting,
                     NotIrreducible, NotStochastic, SingularMatrix)
from .hitting import (AbsorbingSpec, build_block, exact_hitting, first_order_hitting,
                      stationary_hitting)
from .jump import (RateDriftModel, RatePath, exact_jump, jump_first, jump_second_terms,
                   validate_rate)
from .linalg import contraction_power, ctmc_stationary, is_primitive, stationary_distribution
from .model import (DriftModel, RewardSpec, TransitionSequence, default_fd_index,
                    drift_sequence, fd_drift, validate_stochastic)
from .modeldoc import ModelDocError, load
from .report import ApproxReport, render_records
from .transient import backward_first, backward_second, exact_transient, forward_first

EXIT_INPUT = 2
EXIT_NUMERIC = 3
FORMATS = ("markdown", "csv", "json-lines")
MU_CHOICES = ("S", "s", "uniform", "stationary", "poisson", "binomial")
VARIANT_CHOICES = ("below-s", "below-S", "review")

HYPOTHESES = {
    NotIrreducible: "the base chain must be irreducible so that its stationary law and "
                    "fundamental matrix exist",
    NotContracting: "the C-block must be uniformly contracting, i.e. the complement of C "
                    "must be reachable from every state of C",
    SingularMatrix: "the system matrix of the expansion is singular",
}


# --------------------------------------------------------------------------
# document -> model objects


class Problem:
    """Validated objects built from a :class:`ModelDoc`."""

    def __init__(self, doc):
        self.doc = doc
        self.seq = None
        self.dm = None
        self.exact_dm = None
        self.rm = None
        self.r = None
        self.mu = None
        self.generator = doc.scalars.get("generator")
        if doc.measure == "jump":
            self._build_jump()
        else:
            self._build_chain()
        self._build_reward()

    # matrices ----------------------------------------------------------
    def _stochastic(self, block, name):
        try:
            return validate_stochastic(block.rows)
        except NotStochastic as exc:
            line = block.row_lines[exc.row] if exc.row is not None else block.line
            raise self.doc.error("matrix %s: %s" % (name, exc), line=line) from None

    def _zero_rows(self, block, name, dim):
        M = block.rows
        if M.shape[0] != dim:
            raise self.doc.error("matrix %s has dim %d, expected %d" % (name, M.shape[0], dim),
                                 line=block.line)
        dev = np.abs(M.sum(axis=1))
        if (dev > 1e-9).any():
            i = int(np.argmax(dev > 1e-9))
            raise self.doc.error("matrix %s row %d sums to %.3e, expected 0" % (name, i, M[i].sum()),
                                 line=block.row_lines[i])
        return M

    def _inventory(self):
        doc = self.doc
        for key in ("s", "S"):
            if key not in doc.scalars:
                raise doc.error("inventory generator needs %s" % key, "generator")
        variant = doc.scalars.get("variant", "review")
        if variant not in VARIANT_CHOICES:
            raise doc.error("unknown variant %r" % variant, "variant")
        try:
            p = chains.InventoryParams(doc.scalars["s"], doc.scalars["S"],
                                       doc.scalars.get("m", 1.0), doc.scalars.get("eps", 0.0))
        except ValueError as exc:
            raise doc.error(str(exc), "generator") from None
        self.inventory = (p, variant)
        self.seq = chains.inventory_sequence(p, variant)
        self.exact_dm = chains.inventory_drift(p, variant)

    def _build_chain(self):
        doc = self.doc
        mats = doc.matrices
        if self.generator == "inventory":
            self._inventory()
            return
        if self.generator == "birth_death":
            if "p_up" not in doc.vectors or "p_down" not in doc.vectors:
                raise doc.error("birth_death generator needs p_up and p_down", "generator")
            try:
                base = validate_stochastic(chains.birth_death(doc.vectors["p_up"], doc.vectors["p_down"]))
            except ValueError as exc:
                raise doc.error(str(exc), "p_up") from None
        elif doc.steps:
            if "base" in mats:
                raise doc.error("give either 'matrix base' or 'matrix step' blocks, not both",
                                line=mats["base"].line)
            steps = [self._stochastic(b, "step %d" % (i + 1)) for i, b in enumerate(doc.steps)]
            dims = {P.shape[0] for P in steps}
            if len(dims) != 1:
                raise doc.error("step matrices differ in dimension", line=doc.steps[0].line)
            self.seq = TransitionSequence.from_list(steps, hold_last=doc.scalars.get("hold_last", False))
            return
        elif "base" in mats:
            base = self._stochastic(mats["base"], "base")
        else:
            raise doc.error("no chain given: need 'matrix base', 'matrix step' blocks or a generator",
                            "measure")
        e1 = self._zero_rows(mats["e1"], "e1", base.shape[0]) if "e1" in mats else np.zeros_like(base)
        e2 = self._zero_rows(mats["e2"], "e2", base.shape[0]) if "e2" in mats else None
        self.dm = DriftModel(base, e1, e2)

    def _build_jump(self):
        doc = self.doc
        mats = doc.matrices
        if "Q" not in mats:
            raise doc.error("jump measure needs 'matrix Q'", "measure")
        try:
            Q = validate_rate(mats["Q"].rows)
        except NotStochastic as exc:
            raise doc.error("matrix Q: %s" % exc, line=mats["Q"].row_lines[exc.row or 0]) from None
        d = Q.shape[0]
        f1 = self._zero_rows(mats["f1"], "f1", d) if "f1" in mats else np.zeros_like(Q)
        f2 = self._zero_rows(mats["f2"], "f2", d) if "f2" in mats else None
        self.rm = RateDriftModel(Q, f1, f2)

    @property
    def dim(self):
        if self.rm is not None:
            return self.rm.base.shape[0]
        if self.dm is not None:
            return self.dm.dim
        return self.seq.dim

    def base_matrix(self):
        return self.dm.base if self.dm is not None else self.seq(1)

    def _build_reward(self):
        doc = self.doc
        d = self.dim
        if "reward" in doc.vectors:
            r = doc.vectors["reward"]
        elif self.generator == "inventory":
            r = chains.inventory_reward(*self.inventory)
        else:
            raise doc.error("missing 'reward = ...'", "measure")
        if r.size != d:
            raise doc.error("reward has %d entries, chain has %d states" % (r.size, d), "reward")
        self.r = r
        mu = doc.get("mu")
        if mu is None and self.generator == "inventory":
            p, variant = self.inventory
            mu = chains.inventory_initial(p, doc.scalars.get("initial", "binomial"), variant)
        elif isinstance(mu, str):
            if mu == "uniform":
                mu = np.full(d, 1.0 / d)
            elif mu == "stationary":
                try:
                    if self.rm is not None:
                        mu = ctmc_stationary(self.rm.base)
                    else:
                        mu = stationary_distribution(self.base_matrix())
                except NotIrreducible as exc:
                    raise self.doc.error("mu = stationary: %s" % exc, "mu") from None
            else:
                raise doc.error("mu must be a vector, 'uniform' or 'stationary'", "mu")
        if mu is None:
            self.mu = None
            return
        mu = np.asarray(mu, dtype=float)
        if mu.size != d:
            raise doc.error("mu has %d entries, chain has %d states" % (mu.size, d), "mu")
        if mu.min() < 0 or abs(mu.sum() - 1.0) > 1e-9:
            raise doc.error("mu must be a probability vector", "mu")
        self.mu = mu

    def reward_spec(self):
        if self.mu is None:
            raise self.doc.error("missing 'mu = ...' (initial distribution)", "measure")
        return RewardSpec(self.r, self.mu)

    def scalar(self, key, default=None, required=False):
        if key in self.doc.scalars:
            return self.doc.scalars[key]
        if required:
            raise self.doc.error("measure %s needs '%s = ...'" % (self.doc.measure, key), "measure")
        return default

    def fitted(self, j):
        """Drift model at index 1: given, or fitted by finite differences."""
        if self.dm is not None:
            return self.dm
        try:
            return fd_drift(self.seq, j)
        except HorizonExceeded as exc:
            raise self.doc.error("sequence too short for fd_index %d: %s" % (j, exc), "fd_index") from None

    def oracle_sequence(self):
        if self.seq is not None:
            return self.seq
        return drift_sequence(self.dm)


# --------------------------------------------------------------------------
# measures


def _try_oracle(fn, notes):
    try:
        return fn()
    except (NotStochastic, HorizonExceeded) as exc:
        notes.append("exact value skipped: %s" % exc)
        return None


def eval_discounted(pb):
    alpha = pb.scalar("alpha", required=True)
    if alpha <= 0:
        raise pb.doc.error("alpha must be positive", "alpha")
    spec = DiscountSpec(alpha, pb.reward_spec())
    precision = pb.scalar("precision", tables.DEFAULT_PRECISION)
    j = pb.scalar("fd_index", default_fd_index(alpha))
    form = pb.scalar("form", "derived")
    notes = []
    approx, terms = {}, {}
    dm = pb.fitted(j)
    approx["order0"] = stationary_value(dm.base, spec)[1]
    approx["order1"] = first_order_linear(dm, spec).kappa1
    if dm.e2 is not None:
        approx["order2"] = second_order_linear(dm, spec, form)
    if pb.exact_dm is not None:
        approx["order1_exact_drift"] = first_order_linear(pb.exact_dm, spec).kappa1
        terms = second_order_terms(pb.exact_dm, spec, form)
        approx["order2_exact_drift"] = sum(terms.values())
    elif dm.e2 is not None:
        terms = second_order_terms(dm, spec, form)
    oracle = _try_oracle(lambda: exact_truncated(pb.oracle_sequence(), spec, precision)[0], notes)
    return ApproxReport("discounted", oracle, approx, terms, tuple(notes))


def eval_hitting(pb):
    if "C" not in pb.doc.vectors:
        raise pb.doc.error("hitting measure needs 'C = ...'", "measure")
    if pb.mu is None:
        raise pb.doc.error("missing 'mu = ...' (initial distribution on C)", "measure")
    try:
        spec = AbsorbingSpec(tuple(pb.doc.vectors["C"]), pb.r, pb.mu)
    except ValueError as exc:
        raise pb.doc.error(str(exc), "C") from None
    dm = pb.fitted(pb.scalar("fd_index", 2))
    approx = {
        "order0": stationary_hitting(build_block(dm.base, spec), spec.mu)[1],
        "order1": first_order_hitting(dm, spec),
    }
    notes = []
    oracle = _try_oracle(lambda: exact_hitting(pb.oracle_sequence(), spec), notes)
    return ApproxReport("hitting", oracle, approx, {}, tuple(notes))


def _backward_model(pb, n, j):
    if pb.dm is not None:
        dm = pb.dm
        e2 = dm.e2 if dm.e2 is not None else np.zeros_like(dm.base)
        t = n - 1.0
        base = dm.base + t * dm.e1 + 0.5 * t * t * e2
        return DriftModel(base, dm.e1 + t * e2, dm.e2)
    seq = pb.seq
    k1 = n - (j - 1)
    if k1 < 1:
        raise pb.doc.error("n = %d too small for backward differences with fd_index %d" % (n, j), "n")
    Pn, Pa = seq(n), seq(k1)
    e1 = (Pn - Pa) / (j - 1)
    e2 = None
    if n - 2 * (j - 1) >= 1:
        e2 = (Pn - 2.0 * Pa + seq(n - 2 * (j - 1))) / (j - 1) ** 2
    return DriftModel(Pn, e1, e2)


def eval_transient(pb):
    n = pb.scalar("n", required=True)
    reward = pb.reward_spec()
    j = pb.scalar("fd_index", 2)
    fwd = forward_first(pb.fitted(j), reward, n)
    bdm = _backward_model(pb, n, j)
    approx = {"forward_first": fwd.value, "backward_first": backward_first(bdm, reward).value}
    terms = {"forward." + k: v for k, v in fwd.terms.items()}
    if bdm.e2 is not None:
        bs = backward_second(bdm, reward, pb.scalar("form", "z2"))
        approx["backward_second"] = bs.value
        terms.update({"backward2." + k: v for k, v in bs.terms.items()})
    notes = []
    oracle = _try_oracle(lambda: exact_transient(pb.oracle_sequence(), reward, n), notes)
    return ApproxReport("transient", oracle, approx, terms, tuple(notes))


def eval_cumulative(pb):
    n = pb.scalar("n", required=True)
    reward = pb.reward_spec()
    res = cumulative_first(pb.fitted(pb.scalar("fd_index", 2)), reward, n,
                           pb.scalar("form", "centred"))
    notes = []
    oracle = _try_oracle(lambda: exact_cumulative(pb.oracle_sequence(), reward, n), notes)
    return ApproxReport("cumulative", oracle, {"cumulative_first": res.value}, dict(res.terms),
                        tuple(notes))


def eval_jump(pb):
    t = pb.scalar("t", required=True)
    rm = pb.rm
    approx = {"order0": float(ctmc_stationary(rm.base) @ pb.r), "jump_first": jump_first(rm, pb.r)}
    terms = {}
    if rm.f2 is not None:
        terms = jump_second_terms(rm, pb.r, pb.scalar("form", "derived"))
        approx["jump_second"] = sum(terms.values())
    notes = []
    oracle = None
    if pb.mu is None:
        notes.append("exact value skipped: no initial distribution")
    else:
        f2 = rm.f2 if rm.f2 is not None else np.zeros_like(rm.base)

        def q_at(s):
            u = s - t
            return rm.base + u * rm.f1 + 0.5 * u * u * f2
        path = RatePath(q_at, t, rm.base.shape[0])

        def run():
            for s in np.linspace(0.0, t, 101):
                validate_rate(q_at(s))
            return exact_jump(path, pb.mu, pb.r, t, pb.scalar("h"))
        oracle = _try_oracle(run, notes)
    return ApproxReport("jump", oracle, approx, terms, tuple(notes))


EVALUATORS = {
    "discounted": eval_discounted,
    "hitting": eval_hitting,
    "transient": eval_transient,
    "cumulative": eval_cumulative,
    "jump": eval_jump,
}


def evaluate(doc):
    """Evaluate the measure of a parsed document into an :class:`ApproxReport`."""
    return EVALUATORS[doc.measure](Problem(doc))


# --------------------------------------------------------------------------
# checks


def run_checks(doc):
    """Hypothesis checks as ``(name, ok, detail)`` triples."""
    results = []
    try:
        pb = Problem(doc)
    except ModelDocError as exc:
        return [("input validation", False, str(exc))]
    results.append(("input validation", True, "matrices and vectors are well formed"))
    if doc.measure == "jump":
        try:
            ctmc_stationary(pb.rm.base)
            results.append(("irreducible Q", True, "unique stationary law"))
        except NotIrreducible as exc:
            results.append(("irreducible Q", False, str(exc)))
        return results
    P = pb.base_matrix()
    if doc.measure in ("transient", "cumulative"):
        try:
            stationary_distribution(P)
            results.append(("irreducible base", True, "unique stationary law"))
        except NotIrreducible as exc:
            results.append(("irreducible base", False, str(exc)))
        ok = is_primitive(P)
        results.append(("aperiodic base", ok,
                        "some power is strictly positive" if ok else "no strictly positive power"))
    if doc.measure == "hitting":
        C = doc.vectors.get("C")
        if not C:
            results.append(("contraction of C-block", False, "C not given"))
        else:
            idx = np.array(sorted(set(C)))
            if idx.max() >= P.shape[0]:
                results.append(("contraction of C-block", False, "C has an index outside the chain"))
            else:
                l = contraction_power(P[np.ix_(idx, idx)], 4 * idx.size)
                results.append(("contraction of C-block", l is not None,
                                "||B^%d|| < 1" % l if l is not None else
                                "NotContracting: no power up to %d below norm one" % (4 * idx.size)))
    if doc.measure == "discounted":
        alpha = doc.scalars.get("alpha")
        results.append(("positive discount rate", alpha is not None and alpha > 0, "alpha = %s" % alpha))
    return results


# --------------------------------------------------------------------------
# commands


def _numerical_message(exc):
    for cls, text in HYPOTHESES.items():
        if isinstance(exc, cls):
            return "%s failed: %s (%s)" % (cls.__name__, text, exc)
    return "numerical failure: %s" % exc


def cmd_eval(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    try:
        doc = load(args.model)
        report = evaluate(doc)
    except ModelDocError as exc:
        print(exc, file=err)
        return EXIT_INPUT
    except OSError as exc:
        print("%s: %s" % (args.model, exc.strerror or exc), file=err)
        return EXIT_INPUT
    except (NotIrreducible, NotContracting, SingularMatrix) as exc:
        print(_numerical_message(exc), file=err)
        return EXIT_NUMERIC
    out.write(render_records(report.records(), args.format))
    for note in report.notes:
        print("note: %s" % note, file=err)
    return 0


def cmd_check(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    try:
        doc = load(args.model)
    except ModelDocError as exc:
        print(exc, file=err)
        return EXIT_INPUT
    except OSError as exc:
        print("%s: %s" % (args.model, exc.strerror or exc), file=err)
        return EXIT_INPUT
    results = run_checks(doc)
    for name, ok, detail in results:
        print("%s  %s: %s" % ("PASS" if ok else "FAIL", name, detail), file=out)
    failed = [r for r in results if not r[1]]
    if failed:
        print("condition failed: %s (%s)" % (failed[0][0], failed[0][2]), file=err)
        return EXIT_INPUT if failed[0][0] == "input validation" else EXIT_NUMERIC
    return 0


def _parse_tables(text):
    try:
        ids = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError("tables must be a comma list of 1..6") from None
    if not ids or any(t not in tables.TABLE_SETTINGS for t in ids):
        raise argparse.ArgumentTypeError("tables must be a comma list of 1..6")
    return ids


def cmd_reproduce(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    variants = (args.reorder_variant,) if args.reorder_variant else tables.VARIANTS
    initials = (args.mu,) if args.mu else tables.INITIAL_KINDS
    try:
        cal = tables.calibrate(variants, initials)
    except CalibrationError as exc:
        print("calibration failed: %s" % exc, file=err)
        print(exc.report, file=err)
        if args.out_dir:
            tables.write_tables(args.out_dir, {}, exc.report)
        return EXIT_NUMERIC
    rows = tables.reproduce(args.tables, cal.model, args.fd_index, args.precision)
    note = cal.report()
    if args.out_dir:
        for path in tables.write_tables(args.out_dir, rows, note):
            print(path, file=out)
    else:
        for t, trs in rows.items():
            if args.format == "csv":
                out.write(tables.table_csv(trs))
            else:
                out.write(tables.table_markdown(t, trs) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nsmc", description="Approximate performance measures of Markov chains with slowly changing transitions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate the measure of a model document")
    p.add_argument("model")
    p.add_argument("--format", choices=FORMATS, default="markdown")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="check the hypotheses of a model document")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reproduce-tables", help="recompute the inventory tables")
    p.add_argument("--out-dir")
    p.add_argument("--tables", type=_parse_tables, default=list(tables.TABLE_SETTINGS))
    p.add_argument("--fd-index", type=int)
    p.add_argument("--precision", type=float, default=tables.DEFAULT_PRECISION)
    p.add_argument("--mu", choices=MU_CHOICES)
    p.add_argument("--reorder-variant", choices=VARIANT_CHOICES)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if getattr(args, "fd_index", None) is not None and args.fd_index < 2:
        print("--fd-index must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
