import json

import numpy as np
import pytest

from qcoarse.cli import main
from qcoarse.qmetric import FiniteMetricSpace, KrausSet
from qcoarse.matcore import Projection
from qcoarse.expander import haar_unitary
from qcoarse.asdim import CoverFamily
from qcoarse import jsonio


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    payload = json.loads(out.out) if out.out.strip() else None
    return code, payload, out.err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def depolarizing_json(n):
    ops = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1 / np.sqrt(n)
            ops.append(e)
    return jsonio.kraus_to_json(KrausSet(ops))


def path_space_json(n):
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]).astype(float)
    return jsonio.space_to_json(FiniteMetricSpace([str(i) for i in range(n)], d))


class TestGap:
    def test_depolarizing_gap_one(self, tmp_path, capsys):
        kraus = write(tmp_path, "k.json", depolarizing_json(3))
        code, payload, _ = run_cli(capsys, "gap", kraus)
        assert code == 0
        assert payload["results"]["epsilon"] == pytest.approx(1.0, abs=1e-12)

    def test_malformed_json_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, payload, err = run_cli(capsys, "gap", str(bad))
        assert code == 2
        assert "malformed" in err

    def test_schema_path_in_error(self, tmp_path, capsys):
        kraus = write(tmp_path, "k.json", {"n": 2, "ops": [{"rows": 2}]})
        code, _, err = run_cli(capsys, "gap", kraus)
        assert code == 2
        assert "ops[0]" in err


class TestGenerators:
    def test_gen_expander_deterministic(self, capsys):
        code1, p1, _ = run_cli(capsys, "gen-expander", "--n", "4", "--d", "3",
                               "--seed", "5")
        code2, p2, _ = run_cli(capsys, "gen-expander", "--n", "4", "--d", "3",
                               "--seed", "5")
        assert code1 == code2 == 0
        assert p1["results"] == p2["results"]
        assert p1["results"]["epsilon"] > 0

    def test_gen_graph_cycle(self, capsys):
        code, payload, _ = run_cli(capsys, "gen-graph", "--n", "5", "--cycle")
        assert code == 0
        lams = [2 * np.cos(2 * np.pi * k / 5) for k in range(1, 5)]
        assert payload["results"]["classical_gap"] == pytest.approx(
            1 - max(abs(l) for l in lams) / 2)

    def test_gen_graph_requires_seed(self, capsys):
        code, _, err = run_cli(capsys, "gen-graph", "--n", "6", "--d", "3")
        assert code == 2
        assert "seed" in err


class TestProjectionGeometry:
    def test_dist_classical(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(3))
        a = write(tmp_path, "a.json", [0])
        b = write(tmp_path, "b.json", [2])
        code, payload, _ = run_cli(capsys, "dist", space, a, b)
        assert code == 0
        assert payload["results"]["dist"] == {"finite": True, "value": 2.0}

    def test_dist_graph_infinite(self, tmp_path, capsys):
        kraus = write(tmp_path, "k.json",
                      jsonio.kraus_to_json(KrausSet([np.eye(2, dtype=complex)])))
        a = write(tmp_path, "a.json", [0])
        b = write(tmp_path, "b.json", [1])
        code, payload, _ = run_cli(capsys, "dist", kraus, a, b)
        assert code == 0
        assert payload["results"]["dist"]["finite"] is False

    def test_nbhd_classical(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(3))
        a = write(tmp_path, "a.json", [0])
        code, payload, _ = run_cli(capsys, "nbhd", space, a, "--eps", "1.5")
        assert code == 0
        assert payload["results"]["neighborhood"] == [0, 1]

    def test_diam_graph_bracket(self, tmp_path, capsys):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        kraus = write(tmp_path, "k.json", jsonio.kraus_to_json(
            KrausSet([np.eye(2, dtype=complex) / np.sqrt(2), x / np.sqrt(2)])))
        p = write(tmp_path, "p.json", jsonio.projection_to_json(
            Projection.identity(2)))
        code, payload, _ = run_cli(capsys, "diam", kraus, p, "--seed", "4")
        assert code == 0
        # the compressed powers stall below rank^2, certifying diam = +inf
        assert payload["results"]["lower_bound"]["finite"] is False
        assert payload["results"]["sampled"] == {"finite": True, "value": 1.0}
        assert payload["results"]["upper_bound"] == "unknown"

    def test_diam_graph_needs_seed(self, tmp_path, capsys):
        kraus = write(tmp_path, "k.json",
                      jsonio.kraus_to_json(KrausSet([np.eye(2, dtype=complex)])))
        p = write(tmp_path, "p.json",
                  jsonio.projection_to_json(Projection.identity(2)))
        code, _, err = run_cli(capsys, "diam", kraus, p)
        assert code == 2 and "seed" in err


class TestVerifiers:
    def test_isoperimetric_end_to_end(self, tmp_path, capsys):
        code, payload, _ = run_cli(capsys, "gen-expander", "--n", "8", "--d", "4",
                                   "--seed", "7")
        spec = write(tmp_path, "spec.json", payload["results"])
        code, payload, _ = run_cli(capsys, "isoperimetric", spec,
                                   "--delta", "1.5", "--trials", "40",
                                   "--seed", "3")
        assert code == 0
        assert payload["results"]["violations"] == 0

    def test_cheeger_command(self, tmp_path, capsys):
        code, payload, _ = run_cli(capsys, "gen-expander", "--n", "6", "--d", "4",
                                   "--seed", "2")
        spec = payload["results"]
        kraus = KrausSet([jsonio.matrix_from_json(u) / np.sqrt(spec["d"])
                          for u in spec["unitaries"]])
        kpath = write(tmp_path, "k.json", jsonio.kraus_to_json(kraus))
        code, payload, _ = run_cli(capsys, "cheeger", kpath, "--trials", "25",
                                   "--seed", "1")
        assert code == 0
        assert payload["results"]["violations"] == 0
        assert payload["results"]["min_sampled"] >= \
            payload["results"]["cheeger_lower_bound"] - 1e-9

    def test_connected_reports_witness(self, tmp_path, capsys):
        blocks = []
        rng = np.random.default_rng(3)
        for _ in range(2):
            k = np.zeros((4, 4), dtype=complex)
            k[:2, :2] = haar_unitary(2, rng) / np.sqrt(2)
            k[2:, 2:] = haar_unitary(2, rng) / np.sqrt(2)
            blocks.append(k)
        kpath = write(tmp_path, "k.json", jsonio.kraus_to_json(KrausSet(blocks)))
        code, payload, _ = run_cli(capsys, "connected", kpath)
        assert code == 0
        assert payload["results"]["connected"] is False
        assert payload["results"]["witness"] is not None
        assert payload["results"]["witness_residual"] <= 1e-9

    def test_rank_diam(self, tmp_path, capsys):
        code, payload, _ = run_cli(capsys, "gen-expander", "--n", "8", "--d", "4",
                                   "--seed", "9")
        spec = write(tmp_path, "spec.json", payload["results"])
        code, payload, _ = run_cli(capsys, "rank-diam", spec, "--trials", "10",
                                   "--seed", "0")
        assert code == 0
        assert payload["results"]["failures"] == 0


class TestCovers:
    def test_cover_and_validate_roundtrip(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(10))
        code, payload, _ = run_cli(capsys, "cover", space, "--r", "2")
        assert code == 0
        assert payload["results"]["colors"] <= 2
        cover = write(tmp_path, "c.json", payload["results"]["cover"])
        code, payload, _ = run_cli(capsys, "validate-cover", space, cover)
        assert code == 0
        assert payload["results"]["all_ok"]

    def test_validate_cover_failure_exit_code(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(4))
        fam = CoverFamily("classical", [[(0,)]], r=0.4, R=0.0)
        cover = write(tmp_path, "c.json", jsonio.cover_to_json(fam))
        code, payload, _ = run_cli(capsys, "validate-cover", space, cover)
        assert code == 1
        assert not payload["results"]["all_ok"]

    def test_saturate_command(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(12))
        p_fam = CoverFamily("classical", [[(0,), (3,)]], r=0.4, R=1.0)
        q_fam = CoverFamily("classical", [[(8, 9)]], r=0.4, R=1.0)
        covp = write(tmp_path, "p.json", jsonio.cover_to_json(p_fam))
        covq = write(tmp_path, "q.json", jsonio.cover_to_json(q_fam))
        code, payload, _ = run_cli(capsys, "saturate", space, covp, covq,
                                   "--r", "0.4")
        assert code == 0
        assert payload["results"]["success"]

    def test_saturate_hypothesis_failure(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(12))
        p_fam = CoverFamily("classical", [[(0, 1), (1, 2)]], r=0.4, R=2.0)
        q_fam = CoverFamily("classical", [[(8, 9)]], r=0.4, R=1.0)
        covp = write(tmp_path, "p.json", jsonio.cover_to_json(p_fam))
        covq = write(tmp_path, "q.json", jsonio.cover_to_json(q_fam))
        code, payload, _ = run_cli(capsys, "saturate", space, covp, covq,
                                   "--r", "1.0")
        assert code == 1
        assert "P family" in payload["results"]["clause"]


class TestModuliCommand:
    def test_moduli_with_bruteforce(self, tmp_path, capsys):
        x = path_space_json(4)
        y = path_space_json(3)
        mpath = write(tmp_path, "m.json",
                      {"from": x, "to": y, "map": [0, 1, 2, 2]})
        code, payload, _ = run_cli(capsys, "moduli", mpath, "--bruteforce")
        assert code == 0
        assert payload["results"]["bruteforce"]["agrees_exactly"]

    def test_identity_flags(self, tmp_path, capsys):
        x = path_space_json(3)
        mpath = write(tmp_path, "m.json", {"from": x, "to": x, "map": [0, 1, 2]})
        code, payload, _ = run_cli(capsys, "moduli", mpath)
        assert code == 0
        assert payload["results"]["flags"]["coarse_at_truncation"]


class TestDeterminism:
    def test_identical_payloads_modulo_timings(self, tmp_path, capsys):
        space = write(tmp_path, "s.json", path_space_json(8))
        runs = []
        for _ in range(2):
            code, payload, _ = run_cli(capsys, "cover", space, "--r", "1.5")
            assert code == 0
            del payload["timings"]
            runs.append(json.dumps(payload, sort_keys=True))
        assert runs[0] == runs[1]

    def test_certify_cli(self, tmp_path, capsys):
        code, payload, _ = run_cli(capsys, "gen-expander", "--n", "8", "--d", "4",
                                   "--seed", "13")
        spec_obj = payload["results"]
        spec = write(tmp_path, "spec.json", spec_obj)
        u = haar_unitary(8, np.random.default_rng(2))
        members = [Projection(8, u[:, i:i + 1]) for i in range(8)]
        fam = CoverFamily("quantum", [members], r=1.0, R=5.0)
        cover = write(tmp_path, "c.json", jsonio.cover_to_json(fam))
        code, payload, _ = run_cli(capsys, "certify", spec, cover,
                                   "--delta", "1.5", "--m", "2")
        assert code == 1
        assert payload["results"]["refuted"]
        assert not payload["results"]["contradiction"]
