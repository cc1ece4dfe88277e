"""One check per acceptance criterion; each prints a PASS/FAIL line."""
from __future__ import annotations

import itertools
import random
import re

import pytest

from mzc import facts as F
from mzc.desugar import translate_extended
from mzc.driver import check_facts, compile_text, parse
from mzc.facts import (
    MODES, FactMismatch, base_env, fact_join, fact_meet_constant, infer_datatype_facts,
    is_duplicable, is_exclusive, mode_join, mode_meet,
)
from mzc.interp import AbandonFailure, GiveToAdopted, StuckState, RuntimeFailure, evaluate
from mzc.kindcheck import KindError, kind_of_extended
from mzc.parser import parse_type
from mzc.permissions import Failure, PermissionEnv, Tables
from mzc.syntax import TYPE, TApp, TVar, alpha_equal, has_surface_nodes

from conftest import ACCEPTED, NEGATIVE, BagMachine, diagnose, program_text
from oracles import QueueModel, coinductive_duplicable
from strategies import random_datatype, random_surface_type
from test_desugar import ABXY, GOLDENS, golden_pair
from test_typecheck import canon

FIFO_SEQUENCES = 1000
LATTICE_CASES = 1000
KIND_SAMPLES = 500
ORACLE_DEFS = 400


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def test_criterion_1_golden_programs(report):
    checked = all(diagnose(program_text(n)) == "ok" for n in ("fig1_append.mz", "fig4_bag.mz"))
    m, v = evaluate(compile_text(program_text("fig1_append.mz")).program)
    appended = m.show(v) == "Cons { head = 1; tail = Cons { head = 2; tail = Cons { head = 3; tail = Nil } } }"
    rng = random.Random(2013)
    bad = 0
    bag = BagMachine()
    for _ in range(FIFO_SEQUENCES):
        bag.reset()
        model = QueueModel()
        for _ in range(rng.randint(0, 12)):
            if rng.random() < 0.55:
                n = rng.randint(0, 999)
                bag.insert(n)
                model.insert(n)
            elif bag.retrieve() != model.retrieve():
                bad += 1
                break
    ok = checked and appended and bad == 0
    report(1, ok, f"type-checked={checked}, append=[1,2,3]:{appended}, "
                  f"FIFO mismatches {bad}/{FIFO_SEQUENCES}")


# atoms listed in the walkthrough of append; generated names are renamed
APPEND_POINTS = {
    "entry of append": ["xs @ list a", "ys @ list a"],
    "arm Nil": ["xs @ Nil", "ys @ list a"],
    "arm Cons": ["xs @ Cons { head = hd~1; tail = tl~2 }", "hd~1 @ a", "tl~2 @ list a",
                 "ys @ list a"],
    "after dst": ["xs @ Cons { head = hd~1; tail = tl~2 }", "hd~1 @ a", "tl~2 @ list a",
                  "ys @ list a", "dst @ MCons { head = hd~1; tail: () }"],
    "after call": ["xs @ Cons { head = hd~1; tail = tl~2 }", "dst @ list a"],
}

# before the recursive call in appendAux, written with folded fields
AUX_BEFORE_CALL = ("xs @ Cons { head = hd; tail = tl } * dst @ Cons { head: a; tail = dst' } * "
                   "dst' @ MCons { head: a; tail: () } * tl @ list a * ys @ list a")


def _env_of(atoms: list[str], program) -> tuple[PermissionEnv, dict]:
    defs = program.datatypes()
    fe = infer_datatype_facts(defs, base_env(defs, program.abstracts()))
    env = PermissionEnv(Tables(defs), fe).declare("a", TYPE)
    plain = {}
    for line in atoms:
        line = re.sub(r"([A-Za-z_']+)~(\d+)", lambda m: plain.setdefault(m.group(0), f"{m.group(1)}_g{m.group(2)}"), line)
        v, t = line.split(" @ ", 1)
        env = env.declare(v).add(v, parse_type(t, {"list", "mlist"}))
    return env, plain


def test_criterion_2_permission_walkthrough(report):
    c = compile_text(program_text("fig1_append.mz"), dump_perms=True)
    dumps = c.checked.dumps
    start = next(i for i, d in enumerate(dumps) if d.label == "entry of append")
    mine = dumps[start:]
    points = {
        "entry of append": mine[0],
        "arm Nil": next(d for d in mine if d.label == "arm Nil"),
        "arm Cons": next(d for d in mine if d.label == "arm Cons"),
        "after dst": next(d for d in mine if any(a.startswith("dst @ MCons") for a in d.atoms)),
        "after call": next(d for d in mine if "dst @ list a" in d.atoms),
    }
    mismatched = [k for k, want in APPEND_POINTS.items() if canon(points[k].atoms) != canon(want)]

    # appendAux: the dumped permission must entail the listing, leaving
    # nothing but duplicable atoms behind
    aux = next(d for d in dumps if any(a.startswith("dst' @ MCons") for a in d.atoms)
               and any(a.startswith("dst @ Cons") for a in d.atoms))
    env, plain = _env_of(aux.atoms, c.program)
    hd = next(v for k, v in plain.items() if k.startswith("head") and f"xs @ Cons {{ head = {k}" in "\n".join(aux.atoms))
    tl = next(v for k, v in plain.items() if k.startswith("tail") and f"tail = {k} }}" in next(a for a in aux.atoms if a.startswith("xs @")))
    goal = parse_type(AUX_BEFORE_CALL.replace("hd", hd).replace("tl", tl), {"list", "mlist"})
    rest = env.subsume(goal)
    entailed = not isinstance(rest, Failure)
    leftover_dup = entailed and all(rest.is_duplicable(a) for atoms in rest.atoms.values() for a in atoms)
    ok = not mismatched and entailed and leftover_dup
    report(2, ok, f"{len(APPEND_POINTS) - len(mismatched)}/{len(APPEND_POINTS)} append points exact, "
                  f"appendAux listing entailed={entailed}, remainder duplicable={leftover_dup}")


REQUIRED_MUTANTS = {"aliased_args", "write_immutable", "read_dynamic", "writetag_arity",
                    "bad_consumes_rhs", "capture"}


def test_criterion_3_negative_suite(report):
    results = {n: diagnose(program_text(f"neg/{n}.mz")) for n in NEGATIVE}
    wrong = {n: r for n, r in results.items() if r != NEGATIVE[n]}
    ok = len(NEGATIVE) >= 10 and REQUIRED_MUTANTS <= set(NEGATIVE) and not wrong
    report(3, ok, f"{len(NEGATIVE) - len(wrong)}/{len(NEGATIVE)} mutants rejected by the expected rule"
                  + (f"; wrong: {wrong}" if wrong else ""))


def test_criterion_4_facts(report):
    env = check_facts(parse("""
data list a = Nil | Cons { head: a; tail: list a }
data mutable mlist a = MNil | MCons { head: a; tail: list a }
data listpair a b = LP { pairs: list (a, b) }
"""))
    lines = F.dump(env, ["list", "mlist", "listpair"]).splitlines()
    want = ["fact list: duplicable a => duplicable", "fact mlist: exclusive",
            "fact listpair: duplicable a, duplicable b => duplicable"]
    lri = TApp("list", (TApp("ref", (TApp("int", ()),)),))
    neither = not is_duplicable(env, lri) and not is_exclusive(env, lri)
    try:
        check_facts(parse(program_text("neg/fact_mismatch.mz")))
        mismatch = False
    except FactMismatch:
        mismatch = True
    ok = lines == want and neither and mismatch
    report(4, ok, f"facts {lines}; list (ref int) neither D nor X={neither}; mismatch rejected={mismatch}")


def _random_fact(rng: random.Random, n: int) -> F.Fact:
    def hyp():
        return None if rng.random() < 0.3 else tuple(rng.choice(MODES) for _ in range(n))
    return F._fact(["a", "b"][:n], [hyp() for _ in MODES])


def test_criterion_5_lattice_laws(report):
    failures = []
    j, m = mode_join, mode_meet
    for x, y, z in itertools.product(MODES, repeat=3):
        laws = [j(x, y) == j(y, x), m(x, y) == m(y, x),
                j(x, j(y, z)) == j(j(x, y), z), m(x, m(y, z)) == m(m(x, y), z),
                j(x, x) == x, m(x, x) == x, j(x, m(x, y)) == x, m(x, j(x, y)) == x]
        if not all(laws):
            failures.append(("mode", x, y, z))
    rng = random.Random(7)
    consts = [F.fact_constant(mode, ["a", "b"][:k]) for mode in MODES for k in range(3)]
    for _ in range(LATTICE_CASES):
        n = rng.randint(0, 2)
        f, g, h = (_random_fact(rng, n) for _ in range(3))
        c, d = (rng.choice([k for k in consts if len(k.params) == n]) for _ in range(2))
        J, M = fact_join, fact_meet_constant
        laws = [J(f, g) == J(g, f), J(f, J(g, h)) == J(J(f, g), h), J(f, f) == f,
                M(c, d) == M(d, c), M(c, M(d, f)) == M(M(c, d), f), M(c, c) == c,
                J(f, M(c, f)) == f, M(c, J(c, f)) == c]
        if not all(laws):
            failures.append(("fact", f, g, h, c, d))
    report(5, not failures, f"{len(MODES) ** 3} mode triples exhaustively, {LATTICE_CASES} random fact "
                            f"cases; {len(failures)} law violations")


def test_criterion_6_desugaring(report):
    goldens = {name: alpha_equal(*golden_pair(name)) for name in GOLDENS}
    rng = random.Random(11)
    checked = surface_left = kind_changed = 0
    while checked < KIND_SAMPLES:
        t = random_surface_type(rng)
        try:
            k = kind_of_extended(ABXY, t)
        except KindError:
            continue
        checked += 1
        out = translate_extended(t)
        surface_left += has_surface_nodes(out)
        try:
            kind_changed += kind_of_extended(ABXY, out) != k
        except KindError:
            kind_changed += 1
    ok = all(goldens.values()) and surface_left == 0 and kind_changed == 0
    report(6, ok, f"goldens {goldens}; {checked} random types: {surface_left} with surface nodes, "
                  f"{kind_changed} not well-kinded after translation")


def test_criterion_7_duplicable_oracle(report):
    lst = parse("data list a = Nil | Cons { head: a; tail: list a }\n")
    args = [TApp("int", ()), TApp("ref", (TApp("int", ()),)), TVar("z")]
    cases = disagreements = 0
    for seed in range(ORACLE_DEFS):
        d = random_datatype(random.Random(seed))
        defs = lst.datatypes() + [d]
        env = infer_datatype_facts(defs, base_env(defs, lst.abstracts()))
        table = {x.name: x for x in defs}
        for combo in itertools.product(args, repeat=len(d.params)):
            t = TApp(d.name, combo)
            cases += 1
            disagreements += is_duplicable(env, t) != coinductive_duplicable(t, table, depth=8)
    report(7, disagreements == 0, f"{ORACLE_DEFS} definitions, {cases} instances, "
                                  f"{disagreements} disagreements with the depth-8 oracle")


def test_criterion_8_runtime_adoption(report):
    try:
        evaluate(compile_text(program_text("runtime/fig4_bag_doubletake.mz")).program)
        double_take = False
    except AbandonFailure:
        double_take = True
    c = compile_text(program_text("runtime/give_take_roundtrip.mz"), dump_perms=True)
    by_line = {d.line: d.atoms for d in c.checked.dumps}
    static = "c @ dynamic" in by_line[15] and "c @ cell int" in by_line[16]
    m, _ = evaluate(c.program)
    cell = next(b for b in m.heap.values() if b.tag == "Cell")
    gave = [e for e in m.events if e.kind == "give"]
    dynamic = cell.adopter is None and len(gave) == 1
    statically_rejected = diagnose(program_text("runtime/give_to_adopted.mz")) == "Give"
    try:
        evaluate(compile_text(program_text("runtime/give_to_adopted.mz"), typecheck=False).program)
        unchecked = False
    except GiveToAdopted:
        unchecked = True
    ok = double_take and static and dynamic and statically_rejected and unchecked
    report(8, ok, f"double take aborts={double_take}, exclusive restored statically={static}, "
                  f"adopter slot cleared={dynamic}, give-to-adopted rejected={statically_rejected} "
                  f"and detected unchecked={unchecked}")


def test_criterion_9_soundness_smoke(report):
    stuck, ran = [], 0
    corpus = ACCEPTED + [f"neg/{n}.mz" for n in NEGATIVE]
    for name in corpus:
        if diagnose(program_text(name)) != "ok":
            continue
        ran += 1
        try:
            evaluate(compile_text(program_text(name)).program)
        except StuckState:
            stuck.append(name)
        except RuntimeFailure:
            pass
    report(9, not stuck, f"{ran} accepted programs run, StuckState in {stuck or 'none'}")
