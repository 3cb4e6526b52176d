"""Adaptive loop: solve, estimate, then refine either the mesh or the index set.

Each step computes the spatial proxy ``eta_{h*,Lambda}`` and the
parametric proxy ``eta_{h,Q}``.  If ``eta_{h*,Lambda} >= tau * eta_{h,Q}``
the mesh is refined uniformly, otherwise Lambda is enlarged by the index
with the largest ``eta_{h,alpha}`` together with every index whose
``eta_{h,alpha}`` reaches ``eta_{h*,Lambda}``.
"""
import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

from .chaos import IndexSet, MultiIndex, detail_index_set
from .errors import ParameterError
from .estimator import ResidualAssembler, estimate
from .femkit.assembly import FeSpacePair, assemble_blocks
from .femkit.detail import build_detail_space
from .mesh import build_unit_square
from .sgsystem import build_operator, solve_minres

TRACE_COLUMNS = (
    "step", "mesh_level", "n_spatial", "n_indices", "n_total", "eta", "delta_h",
    "eta_spatial_proxy", "eta_param_proxy", "decision", "seconds",
)


@dataclass
class AdaptiveConfig:
    tol: float = 1e-3
    max_dofs: int = 100_000
    tau: float = math.sqrt(2.0)
    option: str = "I"
    initial_indices: tuple = ("()",)
    initial_level: int = 2
    pressure: str = "pminus1"
    minres_tol: float = 1e-8
    maxit: int = 5000
    localization: str = "global"
    max_steps: int = 100

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.tau < 1:
            raise ParameterError(f"tau must be at least 1, got {self.tau}")
        if self.max_dofs <= 0:
            raise ParameterError("max_dofs must be positive")


@dataclass
class TraceRow:
    step: int
    mesh_level: int
    n_spatial: int
    n_indices: int
    n_total: int
    eta: float
    delta_h: float
    eta_spatial_proxy: float
    eta_param_proxy: float
    decision: str
    seconds: float
    eta_total: float = 0.0
    eta1: float = 0.0
    eta2: float = 0.0
    eta3: float = 0.0
    eta_alpha: dict = field(default_factory=dict)
    added: list = field(default_factory=list)
    n_active: int = 0
    iterations: int = 0


class AdaptiveTrace:
    """Per-step records; optionally mirrored to a JSON-lines file as they arrive."""

    def __init__(self, jsonl=None):
        self.rows = []
        self._jsonl = jsonl

    def append(self, row):
        self.rows.append(row)
        if self._jsonl is not None:
            with open(self._jsonl, "a") as fh:
                fh.write(json.dumps(asdict(row)) + "\n")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                w.writerow([getattr(r, c) for c in TRACE_COLUMNS])


class AdaptiveState:
    """Current mesh, index set and cached discretisation for one problem."""

    def __init__(self, problem, config, level=None, lam=None):
        self.problem = problem
        self.config = config
        self.level = config.initial_level if level is None else level
        self.lam = lam if lam is not None else IndexSet(MultiIndex.parse(s) for s in config.initial_indices)
        if () not in self.lam:
            raise ParameterError("the index set must contain the zero index")
        self.coeff = problem.coeff
        self.step = 0
        self.sol = None
        self.done = False
        self._blocks = None
        self._detail = None

    @property
    def blocks(self):
        if self._blocks is None:
            mesh = build_unit_square(self.level, self.problem.bc)
            spaces = FeSpacePair(mesh, self.config.pressure)
            self._blocks = assemble_blocks(spaces, self.coeff, self.problem.nu, self.problem.force)
        return self._blocks

    @property
    def detail(self):
        if self._detail is None:
            self._detail = build_detail_space(self.blocks, self.config.option)
        return self._detail

    def needed_terms(self):
        # detail indices reach one parameter beyond those in use
        if self.coeff.kind != "cosine-expansion":
            return self.coeff.truncation
        return self.lam.n_active + 1

    def refine_mesh(self):
        self.level += 1
        self.coeff = self.blocks.coeff
        self._blocks = None
        self._detail = None

    @property
    def n_spatial(self):
        return self.blocks.spaces.n_spatial

    @property
    def n_total(self):
        return self.n_spatial * len(self.lam)


def select_indices(eta_alpha, Q, threshold):
    """Argmax of ``eta_alpha`` over Q together with every index reaching ``threshold``.

    Ties for the maximum go to the lowest parameter number, then the lowest degree.
    """
    rank = {a: i for i, a in enumerate(sorted(Q))}
    best = max(Q, key=lambda a: (eta_alpha[a], -rank[a]))
    return [best] + [a for a in Q if a != best and eta_alpha[a] >= threshold]


def adaptive_step(state):
    """One solve-estimate-refine cycle; returns the state and its trace row."""
    cfg = state.config
    t0 = time.perf_counter()
    blocks = state.blocks
    blocks.ensure_terms(state.needed_terms())
    state.coeff = blocks.coeff
    op = build_operator(blocks, state.lam)
    sol, report = solve_minres(op, tol=cfg.minres_tol, maxit=cfg.maxit)
    state.sol = sol
    Q = detail_index_set(state.lam)
    assembler = ResidualAssembler(blocks, state.detail, sol)
    est = estimate(blocks, state.detail, sol, Q, assembler, cfg.localization)
    eta_k = est.eta_step
    added = []
    if eta_k < cfg.tol:
        decision = "stop"
        state.done = True
    elif est.eta_spatial_proxy >= cfg.tau * est.eta_param_proxy:
        decision = "spatial"
    else:
        decision = "parametric"
        added = select_indices(est.eta_alpha, Q, est.eta_spatial_proxy)
    row = TraceRow(
        step=state.step,
        mesh_level=state.level,
        n_spatial=state.n_spatial,
        n_indices=len(state.lam),
        n_total=state.n_total,
        eta=eta_k,
        delta_h=est.delta_h,
        eta_spatial_proxy=est.eta_spatial_proxy,
        eta_param_proxy=est.eta_param_proxy,
        decision=decision,
        seconds=0.0,
        eta_total=est.eta,
        eta1=est.eta1,
        eta2=est.eta2,
        eta3=est.eta3,
        eta_alpha={str(a): v for a, v in est.eta_alpha.items()},
        added=[str(a) for a in added],
        n_active=state.lam.n_active,
        iterations=report.iterations,
    )
    if decision == "spatial":
        state.refine_mesh()
    elif decision == "parametric":
        state.lam = state.lam.union(IndexSet(added))
    state.step += 1
    row.seconds = time.perf_counter() - t0
    state.last_estimate = est
    return state, row


def run(config, problem, jsonl=None, callback=None):
    """Iterate :func:`adaptive_step` until ``eta < tol`` or the dof budget is exceeded."""
    state = AdaptiveState(problem, config)
    trace = AdaptiveTrace(jsonl)
    for _ in range(config.max_steps):
        state, row = adaptive_step(state)
        trace.append(row)
        if callback is not None:
            callback(row)
        if state.done or state.n_total > config.max_dofs:
            break
    return state.sol, trace
