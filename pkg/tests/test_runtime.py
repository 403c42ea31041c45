import dataclasses
import random

import pytest

from conftest import random_instance
from pcrkit.model import Database
from pcrkit.runtime import SessionTranscript, audit_isolation, execute_session, provision
from pcrkit.schemes import Answer, ParamError, Query, SchemeParams, comm_cost


def _setup(scheme="baseline", seed=0):
    db, x, imm, w, params, expected = random_instance(random.Random(seed), scheme)
    return db, x, imm, w, params, expected


def test_session_is_deterministic():
    db, x, imm, w, params, _ = _setup("ipcr2_plus")
    a = execute_session(provision(db, params, 1), x, params, 9, imm=imm, w=w)
    b = execute_session(provision(db, params, 1), x, params, 9, imm=imm, w=w)
    assert a.to_json() == b.to_json()
    c = execute_session(provision(db, params, 1), x, params, 10, imm=imm, w=w)
    assert c.session_id != a.session_id
    assert c.theta == a.theta


def test_shared_randomness_is_common_and_fresh_per_session():
    db, _, _, _, params, _ = _setup("baseline")
    nodes = provision(db, params, 3)
    r1 = [n.common_randomness(params, "00000000000000aa", 1)["z1"].tolist() for n in nodes]
    r2 = nodes[0].common_randomness(params, "00000000000000ab", 1)["z1"].tolist()
    assert r1[0] == r1[1]
    assert r2 != r1[0]


def test_transcript_json_round_trip(tmp_path):
    db, x, imm, w, params, _ = _setup("mask_plus")
    nodes = provision(db, params, 2)
    tr = execute_session(nodes, x, params, 4, imm=imm, w=w)
    path = tmp_path / "t.json"
    tr.save(path)
    back = SessionTranscript.from_json(path.read_text())
    assert back.to_json() == tr.to_json()
    doc = tr.to_dict()
    assert set(doc) == {"session_id", "scheme", "params", "phases", "outcome", "cost"}
    assert set(doc["phases"][0]["per_server"][0]) == {"n", "query_components", "answer"}
    assert audit_isolation(back, nodes)


def test_audit_detects_tampering():
    db, x, imm, w, params, _ = _setup("baseline")
    nodes = provision(db, params, 2)
    tr = execute_session(nodes, x, params, 4)
    bad = tr.phases[0].answers[0]
    tr.phases[0].answers[0] = Answer(bad.server, bad.phase, ((bad.values[0] + 1) % params.q,) + bad.values[1:])
    assert not audit_isolation(tr, nodes)


def test_audit_detects_foreign_replica():
    db, x, _, _, params, _ = _setup("baseline")
    nodes = provision(db, params, 2)
    tr = execute_session(nodes, x, params, 4)
    other = Database.from_rows([tuple((v + 1) % (params.R + 1) for v in r) for r in db.rows()], params.R)
    assert not audit_isolation(tr, provision(other, params, 2))


def test_server_refuses_foreign_query():
    db, x, _, _, params, _ = _setup("baseline")
    nodes = provision(db, params, 2)
    with pytest.raises(ParamError):
        nodes[0].answer(Query(2, 1, ((0,) * params.d,)), params, "00000000000000aa")


def test_provision_checks_shape():
    db, _, _, _, params, _ = _setup("baseline")
    small = dataclasses.replace(params, M=params.M - 1)
    with pytest.raises(ParamError):
        provision(db, small, 0)


@pytest.mark.parametrize("scheme", ["baseline", "diff", "mask", "baseline_plus", "diff_plus", "mask_plus", "ipcr1", "ipcr1_plus", "lk_baseline", "dot_baseline"])
def test_actual_cost_equals_worst_case_for_single_phase(scheme):
    db, x, imm, w, params, _ = _setup(scheme, 7)
    tr = execute_session(provision(db, params, 0), x, params, 1, imm=imm, w=w)
    cost = comm_cost(params)
    assert (tr.uploaded, tr.downloaded) == (cost["upload"], cost["download"])


def test_two_phase_cost_reduced_when_one_candidate():
    p = SchemeParams.create("ipcr2", 3, 3, 4)
    db = Database.from_rows([(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3)], 3)
    tr = execute_session(provision(db, p, 0), (1, 0, 0), p, 0, imm=[1])
    assert len(tr.phases) == 1 and tr.theta == 2
    assert tr.uploaded + tr.downloaded == 6 * p.d + 3 * p.M
    full = execute_session(provision(db, p, 0), (1, 0, 0), p, 0, imm=[])
    assert len(full.phases) == 2
    assert full.uploaded + full.downloaded == comm_cost(p)["total"]


def test_outcome_matches_oracle_through_runtime():
    for seed in range(30):
        for scheme in ("ipcr2", "ipcr2_plus", "mask"):
            db, x, imm, w, params, expected = _setup(scheme, seed)
            tr = execute_session(provision(db, params, seed), x, params, seed, imm=imm, w=w)
            assert tr.theta == expected
