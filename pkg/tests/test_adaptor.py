import csv
import json
import math

import numpy as np
import pytest

from sgmfem.adaptor import TRACE_COLUMNS, AdaptiveConfig, AdaptiveState, adaptive_step, run
from sgmfem.chaos import IndexSet, MultiIndex
from sgmfem.errors import ParameterError
from sgmfem.femkit.coefficients import affine_scalar
from sgmfem.problems import ProblemDescriptor, tp2


def deterministic_tp2(nu=0.4):
    base = tp2(nu)
    return ProblemDescriptor("tp2-det", nu, base.bc, base.force, affine_scalar(1.0, 0.0))


def test_config_validation():
    with pytest.raises(ParameterError):
        AdaptiveConfig(tau=0.9)
    with pytest.raises(ParameterError):
        AdaptiveConfig(tol=0.0)
    with pytest.raises(ParameterError):
        AdaptiveConfig(max_dofs=0)
    assert AdaptiveConfig().tau == pytest.approx(math.sqrt(2))


def test_huge_tolerance_stops_immediately():
    sol, trace = run(AdaptiveConfig(tol=1e3, initial_level=1), tp2(0.4))
    assert len(trace) == 1
    assert trace.rows[0].decision == "stop"
    assert sol is not None and len(sol.lam) == 1


def test_deterministic_coefficient_refines_mesh_only():
    _, trace = run(AdaptiveConfig(tol=1e-12, max_dofs=4000, initial_level=1), deterministic_tp2())
    assert all(r.decision == "spatial" for r in trace)
    assert all(r.eta_param_proxy == 0.0 for r in trace)
    assert [r.mesh_level for r in trace] == list(range(1, len(trace) + 1))


def test_one_decision_per_step_and_budget():
    cfg = AdaptiveConfig(tol=1e-12, max_dofs=20000, initial_level=1)
    _, trace = run(cfg, tp2(0.49999, sigma=2.0))
    assert all(r.decision in ("spatial", "parametric", "stop") for r in trace)
    assert trace.rows[-1].n_total <= cfg.max_dofs
    assert [r.step for r in trace] == list(range(len(trace)))
    params = [r for r in trace if r.decision == "parametric"]
    assert params and all(r.added for r in params)


def test_marking_rule():
    cfg = AdaptiveConfig(tol=1e-12, initial_level=1)
    state = AdaptiveState(tp2(0.4), cfg)
    lam_before = IndexSet(state.lam)
    state, row = adaptive_step(state)
    if row.eta_spatial_proxy >= cfg.tau * row.eta_param_proxy:
        assert row.decision == "spatial" and state.level == 2
    else:
        assert row.decision == "parametric"
        best = max(row.eta_alpha, key=row.eta_alpha.get)
        assert best in row.added
        for a in row.added:
            assert a == best or row.eta_alpha[a] >= row.eta_spatial_proxy
        assert len(state.lam) == len(lam_before) + len(row.added)


def test_zero_index_required():
    with pytest.raises(ParameterError):
        AdaptiveState(tp2(0.4), AdaptiveConfig(initial_indices=("(1:1)",)))


def test_trace_outputs(tmp_path):
    jsonl = tmp_path / "run.jsonl"
    _, trace = run(AdaptiveConfig(tol=1e-12, max_dofs=3000, initial_level=1), tp2(0.4, sigma=4.0), jsonl=jsonl)
    out = tmp_path / "trace.csv"
    trace.to_csv(out)
    rows = list(csv.reader(open(out)))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(trace) + 1
    events = [json.loads(line) for line in open(jsonl)]
    assert len(events) == len(trace)
    for ev, r in zip(events, trace):
        assert ev["eta"] == r.eta
        assert ev["eta_total"] ** 2 == pytest.approx(ev["eta1"] ** 2 + ev["eta2"] ** 2 + ev["eta3"] ** 2, rel=1e-12)


def test_truncation_grows_with_active_parameters():
    cfg = AdaptiveConfig(tol=1e-12, max_dofs=20000, initial_level=1)
    state = AdaptiveState(tp2(0.49999, sigma=2.0), cfg)
    for _ in range(4):
        state, _ = adaptive_step(state)
        assert state.blocks.n_terms >= state.lam.n_active


def test_selection_union_and_ties():
    from sgmfem.adaptor import select_indices
    Q = IndexSet(["(2:1)", "(1:2)", "(1:1,2:1)"])
    eta = {MultiIndex.parse("(2:1)"): 1.0, MultiIndex.parse("(1:2)"): 1.0, MultiIndex.parse("(1:1,2:1)"): 0.2}
    assert select_indices(eta, Q, 5.0) == [MultiIndex.parse("(1:2)")]
    chosen = select_indices(eta, Q, 0.5)
    assert chosen[0] == MultiIndex.parse("(1:2)") and set(chosen) == {MultiIndex.parse("(1:2)"), MultiIndex.parse("(2:1)")}
    assert len(select_indices(eta, Q, 0.0)) == 3
