"""Job documents and the deterministic batch runner.

A job is a small line-oriented text document: header keys, one or more
module blocks, and a list of commands.  Matrix entries are plain integers
or base-p digit strings (``p:d0.d1.d2...``, little-endian), since decimal
literals get unwieldy at N = 20.

Reports are JSON with sorted keys and a versioned schema; identical input
and seed produce byte-identical output, and every error path lands in a
structured per-command entry instead of a crash.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from .errors import (
    CongruenceFailure,
    Degenerate,
    ExactDivisionFailure,
    NonConvergence,
    NotAUnit,
    NotExact,
    NotIntegral,
    ParseError,
    PrecisionLoss,
    ValidationError,
    WachlabError,
)
from .padic import OFMatrix, PrecisionContext
from .filmod import (
    FilPhiModule,
    category_membership,
    dual_twist,
    hodge_invariants,
    slopes,
    strong_divisibility_check,
    top_slope_absent,
    unit_root_rank,
)
from .cep import cep_check, tam_exponent
from .wach import check_q_cokernel, default_order, gamma_matrix
from . import iwasawa as iw

SCHEMA = "wachlab-report/1"
KNOWN_COMMANDS = ("check", "slopes", "wach", "tam", "cep", "iwasawa-check")


@dataclass
class ModuleSpec:
    name: str
    rank: int
    jumps: list
    rows: list
    shift: int = 0


@dataclass
class JobDocument:
    p: int
    f: int = 1
    N: int = 20
    M: int | None = None
    M_T: int = 32
    seed: int = 0
    emit_matrices: bool = False
    modules: dict = field(default_factory=dict)
    commands: list = field(default_factory=list)

    def order(self) -> int:
        return self.M if self.M else 2 * (self.p - 1) * self.N


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_entry(token: str, p: int, lineno: int) -> int:
    if token.startswith("p:"):
        value = 0
        power = 1
        for part in token[2:].split("."):
            if not part.isdigit():
                raise ParseError(f"bad base-p digit '{part}'", line=lineno)
            d = int(part)
            if d >= p:
                raise ParseError(f"digit {d} out of range for base {p}", line=lineno)
            value += d * power
            power *= p
        return value
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"bad matrix entry '{token}'", line=lineno) from None


def parse_job(text: str) -> JobDocument:
    """Parse and validate a job document; all module invariants are enforced
    here (window, sortedness, invertibility)."""
    header: dict = {}
    modules: dict = {}
    commands: list = []
    current: ModuleSpec | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if current is not None:
            if key == "endmodule":
                modules[current.name] = current
                current = None
            elif key == "rank":
                current.rank = _expect_int(parts, 1, lineno)
            elif key == "jumps":
                current.jumps = [_expect_int(parts, i, lineno)
                                 for i in range(1, len(parts))]
            elif key == "shift":
                current.shift = _expect_int(parts, 1, lineno)
            elif key == "row":
                current.rows.append(parts[1:])
            else:
                raise ParseError(f"unknown module field '{key}'", line=lineno,
                                 field=key)
            continue
        if key == "module":
            if len(parts) != 2:
                raise ParseError("module needs a name", line=lineno)
            if parts[1] in modules:
                raise ParseError(f"duplicate module '{parts[1]}'", line=lineno)
            current = ModuleSpec(parts[1], 0, [], [])
        elif key == "command":
            if len(parts) < 2 or parts[1] not in KNOWN_COMMANDS:
                raise ParseError(f"unknown command '{' '.join(parts[1:])}'",
                                 line=lineno, field="command")
            name = parts[1]
            if name == "iwasawa-check":
                if len(parts) != 2:
                    raise ParseError("iwasawa-check takes no module", line=lineno)
                commands.append((name, None))
            else:
                if len(parts) != 3:
                    raise ParseError(f"command {name} needs a module", line=lineno)
                commands.append((name, parts[2]))
        elif key in ("p", "f", "n", "m", "mt", "seed"):
            header[key] = _expect_int(parts, 1, lineno)
        elif key == "emit-matrices":
            header["emit-matrices"] = parts[1].lower() in ("1", "true", "yes")
        else:
            raise ParseError(f"unknown directive '{key}'", line=lineno, field=key)
    if current is not None:
        raise ParseError("unterminated module block", line=None)
    if "p" not in header:
        raise ParseError("missing prime p", field="p")
    job = JobDocument(
        p=header["p"], f=header.get("f", 1), N=header.get("n", 20),
        M=header.get("m"), M_T=header.get("mt", 32),
        seed=header.get("seed", 0),
        emit_matrices=header.get("emit-matrices", False),
        modules=modules, commands=commands)
    if job.f != 1:
        raise ValidationError("the batch runner supports f = 1 only")
    _validate(job)
    for cmd, mod in commands:
        if mod is not None and mod not in modules:
            raise ParseError(f"command references unknown module '{mod}'",
                             field="command")
    return job


def _expect_int(parts, i, lineno):
    try:
        return int(parts[i])
    except (IndexError, ValueError):
        raise ParseError(f"expected an integer after '{parts[0]}'",
                         line=lineno) from None


def _validate(job: JobDocument):
    """Window, shape, and invertibility checks; raises ValidationError."""
    if job.N < 1:
        raise ValidationError("precision N must be >= 1")
    if job.M is not None and job.M <= job.p - 1:
        raise ValidationError("pi-truncation M must exceed p-1")
    if job.M_T < 1:
        raise ValidationError("T-truncation MT must be >= 1")
    for spec in job.modules.values():
        if spec.rank < 1:
            raise ValidationError(f"module {spec.name}: rank must be >= 1")
        if len(spec.jumps) != spec.rank:
            raise ValidationError(f"module {spec.name}: {spec.rank} jumps expected")
        if len(spec.rows) != spec.rank:
            raise ValidationError(f"module {spec.name}: {spec.rank} matrix rows expected")
        for row in spec.rows:
            if len(row) != spec.rank:
                raise ValidationError(f"module {spec.name}: ragged matrix row")
        build_module(job, spec)  # raises ValidationError on window/determinant


def build_module(job: JobDocument, spec: ModuleSpec) -> FilPhiModule:
    try:
        ctx = PrecisionContext(job.p, job.N, f=job.f)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    entries = [[_parse_entry(tok, job.p, 0) if isinstance(tok, str) else int(tok)
                for tok in row] for row in spec.rows]
    return FilPhiModule(ctx, spec.jumps, OFMatrix(ctx, entries), shift=spec.shift)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

_ERROR_TYPES = (Degenerate, NonConvergence, PrecisionLoss, CongruenceFailure,
                NotAUnit, NotExact, NotIntegral, ExactDivisionFailure,
                ValidationError)


def _error_entry(exc: WachlabError) -> dict:
    return {"type": type(exc).__name__, "reason": str(exc)}


def run_job(job: JobDocument) -> str:
    """Execute all commands; returns the JSON report text (sorted keys,
    stable layout, newline-terminated)."""
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "job": {"p": job.p, "f": job.f, "N": job.N, "M": job.order(),
                "MT": job.M_T, "seed": job.seed},
        "modules": {},
        "results": [],
        "ok": True,
    }
    mods: dict[str, FilPhiModule] = {}
    for name, spec in sorted(job.modules.items()):
        D = build_module(job, spec)
        mods[name] = D
        h, t_H = hodge_invariants(D)
        report["modules"][name] = {
            "rank": D.d,
            "jumps": list(D.jumps),
            "shift": D.shift,
            "t_H": t_H,
            "hodge": {str(j): m for j, m in sorted(h.items())},
            "det_valuation": D.phi_matrix().det().valuation(),
        }
    wach_cache: dict[str, object] = {}
    for cmd, mod in job.commands:
        entry = {"command": cmd, "module": mod}
        try:
            entry["data"] = _run_command(job, cmd, mods.get(mod), wach_cache, mod)
            entry["ok"] = True
        except _ERROR_TYPES as exc:
            entry["ok"] = False
            entry["error"] = _error_entry(exc)
            report["ok"] = False
        report["results"].append(entry)
    return json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"


def _run_command(job, cmd, D, wach_cache, mod_name):
    if cmd == "iwasawa-check":
        return _iwasawa_selfcheck(job)
    if cmd == "check":
        flags = category_membership(D)
        ok, adapted = strong_divisibility_check(D.to_raw())
        return {
            "strongly_divisible": ok,
            "recovered_jumps": list(adapted.jumps) if adapted else None,
            "unit_root_rank": unit_root_rank(D),
            "top_slope_absent": top_slope_absent(D),
            "ab_star": flags.ab_star,
            "a_star_b": flags.a_star_b,
            "both": flags.both,
        }
    if cmd == "slopes":
        return {"slopes": [str(s) for s in slopes(D)]}
    if cmd == "wach":
        W = wach_cache.get(mod_name)
        if W is None:
            W = gamma_matrix(D, 1 + job.p, job.order())
            wach_cache[mod_name] = W
        phi = D.phi_matrix()
        p_matches = all(W.P[i][j].constant_term() == phi.entries[i][j]
                        for i in range(D.d) for j in range(D.d))
        g_identity = _g_congruent_identity(W)
        data = {
            "c": W.c,
            "order": W.order,
            "iterations": W.iterations,
            "residual_zero": W.residual_zero,
            "residual_valuation": W.residual_valuation,
            "eligibility": {"unit_root_rank": unit_root_rank(D),
                            "top_slope_absent": top_slope_absent(D)},
            "P_mod_pi_equals_phi": p_matches,
            "G_identity_mod_pi_pm1": g_identity,
            "q_cokernel": check_q_cokernel(W),
        }
        if job.emit_matrices:
            data["matrices"] = {
                name: [[s.raw() for s in row] for row in mat]
                for name, mat in (("P", W.P), ("Q", W.Q), ("H", W.H), ("G", W.G))
            }
        return data
    if cmd == "tam":
        return {"exponent": tam_exponent(D)}
    if cmd == "cep":
        data = cep_check(D).as_dict()
        data["dual_jumps"] = list(dual_twist(D, 1).jumps)
        return data
    raise ValidationError(f"unhandled command {cmd}")


def _g_congruent_identity(W) -> bool:
    p = W.D.ctx.p
    for i in range(W.D.d):
        for j in range(W.D.d):
            head = W.G[i][j].coeffs[: p - 1]
            want_const = 1 if i == j else 0
            if head[0].coeffs[0] != want_const:
                return False
            if any(not c.is_zero() for c in head[1:]):
                return False
    return True


def _iwasawa_selfcheck(job: JobDocument) -> dict:
    ctx = iw.IwasawaContext(job.p, job.M_T, N=job.N)
    rng = random.Random(job.seed ^ 0x1DA)
    def rand_unit():
        comps = []
        for _ in range(ctx.p - 1):
            row = [Fraction(rng.randrange(-50, 50)) for _ in range(ctx.M_T)]
            c = rng.randrange(1, 50)
            while c % ctx.p == 0:
                c = rng.randrange(1, 50)
            row[0] = Fraction(c)
            comps.append(row)
        return iw.IwasawaElement(ctx, comps)
    ide = all(
        iw.idempotent(ctx, i) * iw.idempotent(ctx, j) ==
        (iw.idempotent(ctx, i) if i == j else iw.IwasawaElement.zero(ctx))
        for i in range(ctx.p - 1) for j in range(ctx.p - 1))
    total = iw.IwasawaElement.zero(ctx)
    for i in range(ctx.p - 1):
        total = total + iw.idempotent(ctx, i)
    ide = ide and total == iw.IwasawaElement.one(ctx)
    x = rand_unit()
    roundtrip = iw.twist_minus1(iw.twist1(x)) == x
    y = rand_unit()
    evalhom = (iw.eval_at_zero(x * y) == iw.eval_at_zero(x) * iw.eval_at_zero(y))
    units = iw.is_lambda_unit(x * y) == (iw.is_lambda_unit(x) and iw.is_lambda_unit(y))
    consistency = iw.delta_twist_consistency(x, iw.twist1(x))
    return {
        "idempotents_ok": ide,
        "twist_roundtrip_ok": roundtrip,
        "eval_homomorphism_ok": evalhom,
        "unit_multiplicativity_ok": units,
        "twist_consistency_ok": consistency,
    }


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------

def generate_corpus(p: int, d_max: int, count: int, seed: int,
                    eligibility: str = "unit_root") -> list[JobDocument]:
    """Pseudorandom eligible modules as ready-to-run jobs, deterministic per
    seed.

    Filters: invertible A, jumps within the {0,1}-window bound (top jump at
    most p-2), the requested slope condition, and the generic-case
    determinant preconditions on both the module and its dual twist.
    """
    if d_max < 1 or d_max > 3:
        raise ValidationError("d_max must be in [1, 3]")
    d_min = 1
    if eligibility == "top":
        # a rank-one module always carries its top slope
        if d_max < 2:
            raise ValidationError("top-slope eligibility needs d_max >= 2")
        d_min = 2
    rng = random.Random(seed)
    ctx = PrecisionContext(p, 20)
    jobs = []
    attempts = 0
    while len(jobs) < count:
        attempts += 1
        if attempts > 20000 * max(count, 1):
            raise ValidationError("corpus generation stalled; filters too tight")
        d = d_min + rng.randrange(d_max - d_min + 1)
        jumps = sorted(rng.randrange(p - 1) for _ in range(d))
        entries = [[rng.randrange(ctx.pN) for _ in range(d)] for _ in range(d)]
        A = OFMatrix(ctx, entries)
        if not A.det().is_unit():
            continue
        D = FilPhiModule(ctx, jumps, A)
        if eligibility == "unit_root":
            if unit_root_rank(D) != 0:
                continue
        elif eligibility == "top":
            if not top_slope_absent(D):
                continue
        else:
            raise ValidationError(f"unknown eligibility '{eligibility}'")
        try:
            tam_exponent(D)
            tam_exponent(dual_twist(D, 1))
        except (Degenerate, PrecisionLoss):
            continue
        name = f"m{len(jobs)}"
        spec = ModuleSpec(name, d, list(jumps),
                          [[str(x) for x in row] for row in entries], 0)
        jobs.append(JobDocument(
            p=p, N=20, seed=seed, modules={name: spec},
            commands=[("check", name), ("wach", name), ("tam", name),
                      ("cep", name)]))
    return jobs


def format_job(job: JobDocument) -> str:
    """Serialize a job back to the input text format."""
    out = [f"p {job.p}", f"f {job.f}", f"N {job.N}"]
    if job.M:
        out.append(f"M {job.M}")
    out.append(f"MT {job.M_T}")
    out.append(f"seed {job.seed}")
    if job.emit_matrices:
        out.append("emit-matrices true")
    for name, spec in sorted(job.modules.items()):
        out.append("")
        out.append(f"module {name}")
        out.append(f"rank {spec.rank}")
        out.append("jumps " + " ".join(str(j) for j in spec.jumps))
        if spec.shift:
            out.append(f"shift {spec.shift}")
        for row in spec.rows:
            out.append("row " + " ".join(str(t) for t in row))
        out.append("endmodule")
    out.append("")
    for cmd, mod in job.commands:
        out.append(f"command {cmd}" + (f" {mod}" if mod else ""))
    return "\n".join(out) + "\n"
