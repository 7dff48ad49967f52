"""Synthetic corpora with known ground truth: random POUs and edit scripts, a
phased lifecycle repository, and a large POU for latency runs.

Nothing here imports the analysis code; expected values come from the
construction alone.
"""
from __future__ import annotations

import math
import os
import random
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

# ---- random POUs and edit scripts -----------------------------------------


@dataclass
class StNode:
    kind: str                     # Assign, Call, If, Elsif-arm, Else-arm, While, For, Repeat, Case, Case-arm, Exit, Return
    head: str = ""
    children: List["StNode"] = field(default_factory=list)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def render(self, indent: int = 0) -> List[str]:
        pad = "    " * indent
        k = self.kind
        if k in ("Assign", "Call", "Exit", "Return"):
            return [pad + self.head]
        if k == "If":
            body = [c for c in self.children if c.kind not in ("Elsif-arm", "Else-arm")]
            arms = [c for c in self.children if c.kind in ("Elsif-arm", "Else-arm")]
            out = [f"{pad}IF {self.head} THEN"]
            for c in body:
                out += c.render(indent + 1)
            for arm in arms:
                out.append(f"{pad}ELSIF {arm.head} THEN" if arm.kind == "Elsif-arm" else f"{pad}ELSE")
                for c in arm.children:
                    out += c.render(indent + 1)
            return out + [f"{pad}END_IF;"]
        if k == "While":
            out = [f"{pad}WHILE {self.head} DO"]
            for c in self.children:
                out += c.render(indent + 1)
            return out + [f"{pad}END_WHILE;"]
        if k == "For":
            out = [f"{pad}FOR {self.head} DO"]
            for c in self.children:
                out += c.render(indent + 1)
            return out + [f"{pad}END_FOR;"]
        if k == "Repeat":
            out = [f"{pad}REPEAT"]
            for c in self.children:
                out += c.render(indent + 1)
            return out + [f"{pad}UNTIL {self.head}", f"{pad}END_REPEAT;"]
        if k == "Case":
            arms = [c for c in self.children if c.kind == "Case-arm"]
            other = [c for c in self.children if c.kind == "Else-arm"]
            out = [f"{pad}CASE {self.head} OF"]
            for arm in arms:
                out.append(f"{pad}    {arm.head}:")
                for c in arm.children:
                    out += c.render(indent + 2)
            for arm in other:
                out.append(f"{pad}ELSE")
                for c in arm.children:
                    out += c.render(indent + 1)
            return out + [f"{pad}END_CASE;"]
        raise ValueError(k)


class PouBuilder:
    """Random FB made of uniquely named statements, so any edit is unambiguous."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.serial = 0
        self.inputs: List[str] = []
        self.locals: List[str] = []
        self.body: List[StNode] = []

    def _name(self, prefix: str) -> str:
        self.serial += 1
        return f"{prefix}{self.serial}"

    def new_local(self) -> str:
        name = self._name("v")
        self.locals.append(name)
        return name

    def new_input(self) -> str:
        name = self._name("in")
        self.inputs.append(name)
        return name

    def simple(self) -> StNode:
        target = self.new_local()
        lit = self.rng.randint(1, 999)
        return StNode("Assign", f"{target} := {target} + {lit};")

    def compound(self, depth: int = 0) -> StNode:
        rng = self.rng
        kind = rng.choice(["If", "While", "For", "Repeat", "Case"]) if depth < 2 else None
        if kind is None:
            return self.simple()
        var = self.new_local()
        kids = lambda n: [self.statement(depth + 1) for _ in range(n)]  # noqa: E731
        if kind == "If":
            node = StNode("If", f"{var} > {rng.randint(0, 99)}", kids(rng.randint(1, 2)))
            for _ in range(rng.randint(0, 2)):
                node.children.append(StNode("Elsif-arm", f"{var} < {rng.randint(0, 99)}", kids(1)))
            if rng.random() < 0.5:
                node.children.append(StNode("Else-arm", "", kids(1)))
            return node
        if kind == "While":
            return StNode("While", f"{var} < {rng.randint(1, 99)}", kids(rng.randint(1, 2)))
        if kind == "For":
            return StNode("For", f"{var} := 1 TO {rng.randint(2, 9)}", kids(rng.randint(1, 2)))
        if kind == "Repeat":
            return StNode("Repeat", f"{var} > {rng.randint(1, 99)}", kids(rng.randint(1, 2)))
        node = StNode("Case", var)
        for label in range(rng.randint(1, 3)):
            node.children.append(StNode("Case-arm", str(label), kids(1)))
        if rng.random() < 0.5:
            node.children.append(StNode("Else-arm", "", kids(1)))
        return node

    def statement(self, depth: int = 0) -> StNode:
        return self.compound(depth) if self.rng.random() < 0.3 else self.simple()

    def render(self) -> str:
        lines = ["FUNCTION_BLOCK FB_Random", "VAR_INPUT"]
        lines += [f"    {n} : INT;" for n in self.inputs] or ["    in0 : INT;"]
        lines += ["END_VAR", "VAR"]
        lines += [f"    {n} : INT;" for n in self.locals] or ["    v0 : INT;"]
        lines += ["END_VAR"]
        for s in self.body:
            lines += s.render()
        lines.append("END_FUNCTION_BLOCK")
        return "\n".join(lines) + "\n"


def count_nodes(stmts: List[StNode]) -> Counter:
    return Counter(n.kind for s in stmts for n in s.walk())


def _top_count(stmts: List[StNode]) -> int:
    return sum(1 for s in stmts for _ in s.walk())


@dataclass
class EditScript:
    before: str
    after: str
    added: Counter            # statement kind -> nodes added
    removed: Counter
    inputs_added: int = 0
    inputs_removed: int = 0
    locals_added: int = 0
    locals_removed: int = 0
    kind: str = "insert"


def random_edit_script(seed: int, max_statements: int = 50) -> EditScript:
    """Insert-only or delete-only edits; expected counts follow from the script itself."""
    rng = random.Random(seed)
    b = PouBuilder(rng)
    for _ in range(rng.randint(2, 6)):
        b.new_input()
    while _top_count(b.body) < max_statements * 0.6:
        s = b.statement()
        if _top_count(b.body) + _top_count([s]) > max_statements:
            break
        b.body.append(s)
    before = b.render()
    mode = "insert" if seed % 2 == 0 else "delete"
    added, removed = Counter(), Counter()
    in_add = in_rem = loc_add = loc_rem = 0
    if mode == "insert":
        n_before_locals = len(b.locals)
        for _ in range(rng.randint(1, 5)):
            s = b.statement()
            if _top_count(b.body) + _top_count([s]) > max_statements:
                break
            # insert at top level or inside an existing compound body
            hosts = [n for top in b.body for n in top.walk()
                     if n.kind in ("While", "For", "Repeat", "Elsif-arm", "Else-arm", "Case-arm")]
            if hosts and rng.random() < 0.4:
                host = rng.choice(hosts)
                host.children.insert(rng.randint(0, len(host.children)), s)
            else:
                b.body.insert(rng.randint(0, len(b.body)), s)
            added += count_nodes([s])
        for _ in range(rng.randint(0, 2)):
            b.new_input()
            in_add += 1
        loc_add = len(b.locals) - n_before_locals
    else:
        k = rng.randint(1, max(1, len(b.body) // 3))
        for idx in sorted(rng.sample(range(len(b.body)), k), reverse=True):
            gone = b.body.pop(idx)
            removed += count_nodes([gone])
        for _ in range(rng.randint(0, min(2, len(b.inputs) - 1))):
            b.inputs.pop(rng.randrange(len(b.inputs)))
            in_rem += 1
    return EditScript(before, b.render(), added, removed, in_add, in_rem, loc_add, loc_rem, mode)


# ---- phased lifecycle repository -------------------------------------------

PHASES = ("Design", "StartUp", "Operation")
W_FUNCTIONAL = 0.8 * 1.0 + 0.2 * 0.5
W_OPERATOR = 0.8 * 0.33 + 0.2 * 0.5


def expected_delta(ratio: float, w: float, sloc: int) -> float:
    k_e = min(1.0, max(0.0, (sloc - 150) / 850))
    return (1 - k_e) * w * ratio + k_e * w * (1 - math.exp(-5 * ratio))


@dataclass
class LifecycleStep:
    phase: str
    category: str
    inputs_added: int
    literals_changed: int
    expected_maturity: float = 0.0
    expected_functional: float = 0.0
    expected_total: float = 0.0
    sha: str = ""


class LifecycleRepo:
    """One FB evolving through Design, StartUp and Operation.

    Each changeset adds ``f`` input variables and rewrites the literal of
    ``m`` assignments. Phase by phase, ``f`` shrinks faster than ``m``, so both
    the mean change impact and the functional share of it decrease; ``build``
    checks both orderings on its own ground truth.
    """

    N_ASSIGN = 120
    # phase -> (choices for f, choices for m, change category)
    PLAN = {"Design": ((2, 3, 4), (1, 2), "Feature"),
            "StartUp": ((1, 2), (2, 3, 4), "Enhancement"),
            "Operation": ((0, 0, 0, 1), (1, 2, 3), "BugFix")}

    def __init__(self, seed: int = 11, per_phase: int = 10):
        self.rng = random.Random(seed)
        self.per_phase = per_phase
        self.n_inputs = 2
        self.values = [100 + k for k in range(self.N_ASSIGN)]
        self.steps: List[LifecycleStep] = []

    def text(self) -> str:
        lines = ["FUNCTION_BLOCK FB_Life", "VAR_INPUT"]
        lines += [f"    in{k} : INT;" for k in range(1, self.n_inputs + 1)]
        lines += ["END_VAR", "VAR"]
        lines += [f"    y{k} : INT;" for k in range(1, self.N_ASSIGN + 1)]
        lines += ["END_VAR"]
        lines += [f"y{k + 1} := {v};" for k, v in enumerate(self.values)]
        lines.append("END_FUNCTION_BLOCK")
        return "\n".join(lines) + "\n"

    def sloc(self) -> int:
        return self.n_inputs + 2 * self.N_ASSIGN + 6

    def _step(self, phase: str, serial: int) -> LifecycleStep:
        f_choices, m_choices, category = self.PLAN[phase]
        f = self.rng.choice(f_choices)
        m = self.rng.choice(m_choices)
        sloc = self.sloc()
        deltas_f = [expected_delta(f / max(self.n_inputs, f), W_FUNCTIONAL, sloc)] if f else []
        r = m / self.N_ASSIGN
        deltas_o = [expected_delta(r, W_OPERATOR, sloc)] * 2   # assignment + numeric literal
        total = math.fsum(deltas_f + deltas_o)
        step = LifecycleStep(phase, category, f, m,
                             expected_maturity=1 - total / (len(deltas_f) + 2),
                             expected_functional=math.fsum(deltas_f), expected_total=total)
        self.n_inputs += f
        for k in self.rng.sample(range(self.N_ASSIGN), m):
            self.values[k] += 1000 * serial + 7
        return step

    def build(self, root: str) -> List[LifecycleStep]:
        git = init_repo(root)
        path = os.path.join(root, "fb_life.st")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.text())
        git("add", "fb_life.st")
        git("commit", "-q", "-m", "[dev] [phase:design] initial FB_Life", date=0)
        serial = 0
        for phase in PHASES:
            for _ in range(self.per_phase):
                serial += 1
                step = self._step(phase, serial)
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(self.text())
                git("add", "fb_life.st")
                tag = phase.lower() if phase != "StartUp" else "startup"
                git("commit", "-q", "-m", f"[{step.category.lower()}] [phase:{tag}] change {serial}",
                    date=serial)
                step.sha = git("rev-parse", "HEAD").strip()
                self.steps.append(step)
        impact = [1 - v for v in phase_ground_truth(self.steps).values()]
        share = list(functional_share_ground_truth(self.steps).values())
        for series in (impact, share):
            if not all(a > b for a, b in zip(series, series[1:])):
                raise AssertionError(f"generator plan does not decrease over phases: {series}")
        return self.steps


def _git(root: str):
    def run(*args, date: Optional[int] = None) -> str:
        env = dict(os.environ)
        if date is not None:
            stamp = f"2024-01-{1 + date // 24:02d}T{date % 24:02d}:00:00+00:00"
            env.update(GIT_AUTHOR_DATE=stamp, GIT_COMMITTER_DATE=stamp)
        return subprocess.run(["git", *args], cwd=root, check=True, capture_output=True,
                              text=True, env=env).stdout
    return run


def phase_ground_truth(steps: List[LifecycleStep]) -> Dict[str, float]:
    out = {}
    for ph in PHASES:
        vals = [s.expected_maturity for s in steps if s.phase == ph]
        out[ph] = math.fsum(vals) / len(vals)
    return out


def functional_share_ground_truth(steps: List[LifecycleStep]) -> Dict[str, float]:
    out = {}
    for ph in PHASES:
        sel = [s for s in steps if s.phase == ph]
        out[ph] = math.fsum(s.expected_functional for s in sel) / math.fsum(s.expected_total for s in sel)
    return out


# ---- large POU --------------------------------------------------------------


def large_pou(target_sloc: int = 5000, variant: int = 0) -> str:
    """A single FB of about ``target_sloc`` lines; ``variant`` > 0 edits a few blocks."""
    blocks = (target_sloc - 20) // 12
    lines = ["FUNCTION_BLOCK FB_Large", "VAR_INPUT", "    iStart : BOOL;", "    iLimit : INT;"]
    if variant:
        lines.append("    iSensor2 : BOOL;")
    lines += ["END_VAR", "VAR", "    k : INT;",
              f"    a : ARRAY[0..{blocks}] OF INT;", f"    s : ARRAY[0..{blocks}] OF INT;",
              "    t : TON;", "END_VAR"]
    for b in range(blocks):
        edited = variant and b % 97 == 0
        cond = f"a[{b}] > iLimit" + (" AND iSensor2" if edited else "")
        lines += [
            f"IF {cond} THEN",
            f"    a[{b}] := a[{b}] - {b % 50 + 1};",
            f"    s[{b}] := {b};",
            f"ELSIF iStart THEN",
            f"    a[{b}] := a[{b}] + {(b % 7) + (3 if edited else 1)};",
            "ELSE",
            f"    a[{b}] := 0;",
            "END_IF;",
            f"FOR k := 0 TO {b % 5 + 1} DO",
            f"    s[{b}] := s[{b}] + k;",
            "END_FOR;",
            f"t(IN := iStart, PT := T#{100 + (b % 9) * (2 if edited else 1)}MS);",
        ]
    lines.append("END_FUNCTION_BLOCK")
    return "\n".join(lines) + "\n"


def init_repo(root: str):
    os.makedirs(root, exist_ok=True)
    git = _git(root)
    git("init", "-q")
    git("config", "user.email", "dev@example.com")
    git("config", "user.name", "Plant Developer")
    git("config", "commit.gpgsign", "false")
    return git


def commit_file(git, root: str, rel: str, text, message: str, date: int) -> str:
    full = os.path.join(root, rel)
    os.makedirs(os.path.dirname(full) or root, exist_ok=True)
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(full, mode, **({} if isinstance(text, bytes) else {"encoding": "utf-8"})) as fh:
        fh.write(text)
    git("add", rel)
    git("commit", "-q", "-m", message, date=date)
    return git("rev-parse", "HEAD").strip()

