"""Command-line interface: golden outputs, exit codes, and JSON reports."""

import json

import numpy as np
import pytest

from qfeedback import (
    AnnihilationQSys,
    ControllerModel,
    CostOutput,
    PlantModel,
    load_system,
    save_system,
    trivial_controller,
)
from qfeedback.cli import main

from conftest import ROOT2, one_port_cavity, two_port_cavity_plant


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """System description files shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli_corpus")

    def put(name, model, **kwargs):
        path = root / name
        save_system(path, model, **kwargs)
        return path

    put("cavity_sys.json", one_port_cavity())
    put("cavity_plant.json", two_port_cavity_plant(with_cost=True))
    put("plant_nocost.json", two_port_cavity_plant())
    put("trivial_ctrl.json", trivial_controller(1, 1))
    put(
        "badk_sys.json",
        AnnihilationQSys(f=[[-1.0]], g=[[-ROOT2]], h=[[ROOT2]], k=[[2.0]]),
    )
    put(
        "nonpr_plant.json",
        PlantModel(
            kind="annihilation",
            f=[[-1.0]],
            g_w=[[-1.0]],
            g_u=[[-1.0]],
            h=[[1.0]],
            k=[[2.0]],
            cost=CostOutput(c=[[1.0]], d=[[0.0]]),
        ),
    )
    # static output feedback u = -2y, which destabilizes the cavity loop
    put(
        "static_neg2.json",
        ControllerModel(
            kind="annihilation",
            f_c=np.zeros((0, 0)),
            g_cw=np.zeros((0, 0)),
            g_cy=np.zeros((0, 1)),
            h_c=np.zeros((1, 0)),
            k_cw=np.zeros((1, 0)),
            k_cy=[[-2.0]],
        ),
    )

    def triple(name, f_c, g_cy, h_c):
        put(
            name,
            ControllerModel(
                kind="annihilation",
                f_c=f_c,
                g_cw=np.zeros((1, 1)),
                g_cy=g_cy,
                h_c=h_c,
                k_cw=np.eye(1),
                k_cy=np.zeros((1, 1)),
            ),
        )

    triple("triple_boundary.json", [[-1.0]], [[0.0]], [[1.0]])
    triple("triple_bad.json", [[-1.0]], [[0.0]], [[2.0]])
    triple("triple_min.json", [[-1.0]], [[1.0]], [[0.0]])

    malformed = root / "malformed.json"
    malformed.write_text(
        json.dumps(
            {
                "schema_version": 1,
                "kind": "annihilation",
                "dimensions": {"n_modes": 1, "m_fields": 1},
                "matrices": {
                    "f": [[[1]]],
                    "g": [[[1, 0]]],
                    "h": [[[1, 0]]],
                    "k": [[[1, 0]]],
                },
            }
        )
    )
    return root


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheck:
    def test_realizable_cavity_golden_text(self, corpus, capsys):
        path = corpus / "cavity_sys.json"
        code, out, err = run(capsys, "check", path)
        assert code == 0 and err == ""
        assert out == (
            f"command: check {path}\n"
            "kind: annihilation\n"
            "realizable: true\n"
            "theta: [[[1.0000000000000002, 0.0]]]\n"
            "residuals: feedthrough=0.00e+00 lyapunov=0.00e+00 coupling=2.22e-16\n"
            "seed: 1729\n"
        )

    def test_transfer_flag_adds_frequency_domain_check(self, corpus, capsys):
        code, out, _ = run(capsys, "check", corpus / "cavity_sys.json", "--transfer")
        assert code == 0
        assert "transfer check (lossless_bounded_real): true" in out
        assert "prongs: stability=pass algebraic=pass sampled=pass" in out

    def test_unrealizable_system_exits_one_with_reason(self, corpus, capsys):
        code, out, _ = run(capsys, "check", corpus / "badk_sys.json")
        assert code == 1
        assert "realizable: false" in out
        assert "failure_reason: feedthrough" in out

    def test_tol_flag_loosens_the_verdict(self, corpus, capsys):
        code, out, _ = run(capsys, "--tol", "2.0", "check", corpus / "badk_sys.json")
        assert code == 0
        assert "realizable: true" in out
        assert "feedthrough=1.00e+00" in out

    def test_malformed_entry_exits_two_on_stderr(self, corpus, capsys):
        code, out, err = run(capsys, "check", corpus / "malformed.json")
        assert code == 2 and out == ""
        assert err == "input error: matrices.f[0][0]: entry must be [re, im]\n"

    def test_missing_file_exits_two(self, corpus, capsys):
        code, _, err = run(capsys, "check", corpus / "absent.json")
        assert code == 2
        assert err.startswith("input error: cannot read file")

    def test_json_report_schema(self, corpus, capsys):
        path = corpus / "cavity_sys.json"
        code, out, _ = run(capsys, "--format", "json", "check", path, "--transfer")
        assert code == 0
        report = json.loads(out)
        assert report["command"] == "check"
        assert report["path"] == str(path)
        assert report["realizable"] is True
        assert report["indeterminate"] is False
        assert report["failure_reason"] is None
        assert set(report["residuals"]) == {"feedthrough", "lyapunov", "coupling"}
        assert report["transfer"]["verdict"] is True
        assert report["transfer"]["prongs"] == {
            "stability": "pass",
            "algebraic": "pass",
            "sampled": "pass",
        }
        assert report["seed"] == 1729
        assert report["exit_status"] == 0

    def test_json_input_error_object(self, corpus, capsys):
        code, out, err = run(
            capsys, "--format", "json", "check", corpus / "malformed.json"
        )
        assert code == 2 and err == ""
        report = json.loads(out)
        assert report["location"] == "matrices.f[0][0]"
        assert report["exit_status"] == 2
        assert "entry must be [re, im]" in report["error"]


class TestParams:
    def test_cavity_parameters(self, corpus, capsys):
        code, out, _ = run(capsys, "params", corpus / "cavity_sys.json")
        assert code == 0
        assert "hamiltonian: [[[0.0, 0.0]]]" in out
        assert "coupling: [[[1.4142135623730951, 0.0]]]" in out

    def test_unrealizable_system_exits_one(self, corpus, capsys):
        code, out, _ = run(capsys, "params", corpus / "badk_sys.json")
        assert code == 1
        assert out == (
            "cannot extract parameters: system is not physically realizable"
            " (feedthrough)\n"
        )


class TestCompose:
    def test_cavity_with_trivial_controller_golden_text(self, corpus, capsys):
        plant = corpus / "cavity_plant.json"
        ctrl = corpus / "trivial_ctrl.json"
        code, out, _ = run(capsys, "compose", plant, ctrl, "--h2", "--hinf")
        assert code == 0
        assert out == (
            f"command: compose {plant} {ctrl}\n"
            "spectrum: -1+0j\n"
            "internally stable: true\n"
            "‖Γ_cl‖2 = 1.000000\n"
            "‖Γ_Z‖∞ = 1.000000\n"
            "seed: 1729\n"
        )

    def test_unstable_loop_reported_without_failing(self, corpus, capsys):
        code, out, _ = run(
            capsys, "compose", corpus / "cavity_plant.json", corpus / "static_neg2.json"
        )
        assert code == 0
        assert "spectrum: 1+0j" in out
        assert "internally stable: false" in out

    def test_require_stable_turns_instability_into_failure(self, corpus, capsys):
        code, out, _ = run(
            capsys,
            "compose",
            corpus / "cavity_plant.json",
            corpus / "static_neg2.json",
            "--require-stable",
        )
        assert code == 1
        assert "internally stable: false" in out

    def test_h2_needs_a_cost_block(self, corpus, capsys):
        code, _, err = run(
            capsys,
            "compose",
            corpus / "plant_nocost.json",
            corpus / "trivial_ctrl.json",
            "--h2",
        )
        assert code == 2
        assert err == "input error: plant has no cost output block\n"

    def test_emit_writes_a_loadable_closed_loop(self, corpus, capsys, tmp_path):
        target = tmp_path / "loop.json"
        code, out, _ = run(
            capsys,
            "compose",
            corpus / "cavity_plant.json",
            corpus / "trivial_ctrl.json",
            "--emit",
            target,
        )
        assert code == 0
        assert f"emitted: {target}" in out
        loaded = load_system(target)
        assert loaded.kind == "plant"
        assert loaded.model.m_u == 0
        assert loaded.metadata == {"label": "closed loop"}

    def test_json_report_carries_both_norms(self, corpus, capsys):
        code, out, _ = run(
            capsys,
            "--format",
            "json",
            "compose",
            corpus / "cavity_plant.json",
            corpus / "trivial_ctrl.json",
            "--h2",
            "--hinf",
        )
        assert code == 0
        report = json.loads(out)
        assert report["internally_stable"] is True
        assert report["h2_norm"] == pytest.approx(1.0, abs=1e-9)
        assert report["hinf_norm"] == pytest.approx(1.0, abs=1e-5)
        assert report["spectrum"] == [[-1.0, 0.0]]
        assert report["exit_status"] == 0


class TestSynth:
    def test_boundary_triple_needs_one_extra_channel(self, corpus, capsys):
        path = corpus / "triple_boundary.json"
        code, out, _ = run(capsys, "synth", path)
        assert code == 0
        assert out == (
            f"command: synth {path}\n"
            "kind: annihilation\n"
            "admissibility norm: 1.0000005\n"
            "extra noise channels: 1\n"
            "theta: [[[1.0, 0.0]]]\n"
            "augmentation realizable: true\n"
            "seed: 1729\n"
        )

    def test_minimal_triple_needs_no_extra_noise(self, corpus, capsys):
        code, out, _ = run(capsys, "synth", corpus / "triple_min.json")
        assert code == 0
        assert "extra noise channels: 0" in out
        assert "theta: [[[0.5, 0.0]]]" in out

    def test_inadmissible_triple_exits_one(self, corpus, capsys):
        code, out, _ = run(capsys, "synth", corpus / "triple_bad.json")
        assert code == 1
        assert out == "H∞ admissibility failed: 2.0 > 1\n"

    def test_json_failure_object(self, corpus, capsys):
        code, out, _ = run(
            capsys, "--format", "json", "synth", corpus / "triple_bad.json"
        )
        assert code == 1
        report = json.loads(out)
        assert report["error"] == "H∞ admissibility failed: 2.0 > 1"
        assert report["exit_status"] == 1

    def test_json_report_schema(self, corpus, capsys):
        code, out, _ = run(
            capsys, "--format", "json", "synth", corpus / "triple_min.json"
        )
        assert code == 0
        report = json.loads(out)
        assert report["zero_noise"] is True
        assert report["extra_noise_channels"] == 0
        assert report["augmentation_realizable"] is True
        assert set(report["augmentation_residuals"]) == {
            "feedthrough",
            "lyapunov",
            "coupling",
        }

    def test_emit_writes_the_augmented_controller(self, corpus, capsys, tmp_path):
        target = tmp_path / "aug.json"
        code, out, _ = run(
            capsys, "synth", corpus / "triple_boundary.json", "--emit", target
        )
        assert code == 0
        assert f"emitted: {target}" in out
        loaded = load_system(target)
        assert loaded.kind == "controller"
        assert loaded.model.m_wt == 2
        assert loaded.metadata == {"label": "synthesized controller"}


class TestVerify:
    def test_zero_gain_on_cavity_golden_text(self, corpus, capsys):
        code, out, _ = run(capsys, "verify", "C1", corpus / "cavity_plant.json")
        assert code == 0
        assert out == (
            "command: verify C1\n"
            "1/1 zero Kalman gain (max ‖K_g‖ = 0e+00)\n"
            "verdict: pass\n"
            "seed: 1729\n"
        )

    def test_zero_gain_random_batch(self, corpus, capsys):
        code, out, _ = run(capsys, "verify", "C1", "--random", "1", "1", "3", "7")
        assert code == 0
        assert "3/3 zero Kalman gain" in out
        assert "verdict: pass" in out

    def test_static_lqg_on_cavity(self, corpus, capsys):
        code, out, _ = run(capsys, "verify", "T5", corpus / "cavity_plant.json")
        assert code == 0
        assert "T5 holds: true" in out
        assert "best static cost 0.707107" in out
        assert "verdict: pass" in out

    def test_trivial_hinf_with_challenger_count(self, corpus, capsys):
        code, out, _ = run(
            capsys,
            "verify",
            "T6",
            corpus / "cavity_plant.json",
            "--challengers",
            "2",
        )
        assert code == 0
        assert "T6 holds: true" in out
        assert "3 loops give closed-loop norms" in out

    def test_lowercase_selector_accepted(self, corpus, capsys):
        code, out, _ = run(capsys, "verify", "c1", corpus / "cavity_plant.json")
        assert code == 0
        assert "verdict: pass" in out

    def test_unrealizable_plant_is_skipped_not_failed(self, corpus, capsys):
        code, out, _ = run(capsys, "verify", "T5", corpus / "nonpr_plant.json")
        assert code == 0
        assert "skipped: plant not physically realizable" in out
        assert "verdict: pass" in out

    def test_json_report_carries_instance_evidence(self, corpus, capsys):
        code, out, _ = run(
            capsys, "--format", "json", "verify", "T5", corpus / "cavity_plant.json"
        )
        assert code == 0
        report = json.loads(out)
        assert report["theorem"] == "T5"
        assert report["failures"] == 0
        (instance,) = report["instances"]
        assert instance["holds"] is True
        assert set(instance["evidence"]) == {
            "max_gain_norm",
            "max_covariance_dev",
            "best_static_cost",
            "best_dynamic_cost",
            "static_used",
            "static_skipped",
            "dynamic_used",
            "dynamic_skipped",
        }
        assert instance["evidence"]["best_static_cost"] == pytest.approx(
            1 / ROOT2, abs=1e-9
        )


class TestGen:
    def test_generated_system_passes_check(self, corpus, capsys, tmp_path):
        target = tmp_path / "gen_sys.json"
        code, _, _ = run(capsys, "gen", "annihilation", "--out", target)
        assert code == 0
        assert load_system(target).kind == "annihilation"
        code, out, _ = run(capsys, "check", target)
        assert code == 0
        assert "realizable: true" in out

    def test_generated_general_system_passes_check(self, corpus, capsys, tmp_path):
        target = tmp_path / "gen_general.json"
        code, _, _ = run(
            capsys, "gen", "general", "--modes", "1", "--fields", "1", "--out", target
        )
        assert code == 0
        assert load_system(target).kind == "general"
        assert run(capsys, "check", target)[0] == 0

    def test_generated_plant_has_requested_shape(self, corpus, capsys, tmp_path):
        target = tmp_path / "gen_plant.json"
        code, _, _ = run(
            capsys, "gen", "plant", "--modes", "1", "--fields", "2", "--out", target
        )
        assert code == 0
        loaded = load_system(target)
        assert loaded.kind == "plant"
        assert loaded.model.n_modes == 1
        assert loaded.model.m_w == 2

    def test_without_out_prints_the_document(self, corpus, capsys):
        code, out, _ = run(
            capsys, "gen", "annihilation", "--modes", "1", "--fields", "1"
        )
        assert code == 0
        body = out[out.index("{") : out.rindex("}") + 1]
        doc = json.loads(body)
        assert doc["kind"] == "annihilation"
        assert doc["metadata"]["seed"] == 1729

    def test_seed_flag_controls_the_draw(self, corpus, capsys):
        first = run(capsys, "--seed", "7", "gen", "annihilation")[1]
        second = run(capsys, "--seed", "7", "gen", "annihilation")[1]
        third = run(capsys, "--seed", "8", "gen", "annihilation")[1]
        assert first == second
        assert first != third
