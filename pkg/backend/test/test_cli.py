"""
Test the command-line entry point: exit codes, reports and determinism
"""

import sys
import os

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from geometry import settings
import main as cli
from main import EXIT_INPUT, EXIT_OK

SAMPLES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "samples")


def sample(name):
    return os.path.join(SAMPLES, name)


def values(path):
    """`key = value` pairs of a written report"""
    text = open(path, encoding="utf-8").read()
    section = text.split("== values ==\n", 1)[1]
    return dict(line.split(" = ", 1) for line in section.splitlines() if " = " in line)


@pytest.fixture(autouse=True)
def restore_rtol():
    rtol = settings.RTOL
    yield
    settings.RTOL = rtol


def test_holonomy_report(tmp_path):
    print("🧪 Running `holonomy` on the rotation sample...")
    report = tmp_path / "holonomy.txt"
    code = cli.main(["holonomy", "--input", sample("rotation.txt"), "--report", str(report)])
    assert code == EXIT_OK
    found = values(report)
    assert float(found[f"{sample('rotation.txt')}.trace"]) == pytest.approx(2.0, abs=1e-9)
    assert found["passed"] == "true"
    assert found["command"] == "holonomy"
    print("✅ holonomy trace 2")


def test_transport_report(tmp_path):
    report = tmp_path / "transport.txt"
    assert cli.main(["transport", "--input", sample("rotation.txt"), "--report", str(report)]) == EXIT_OK
    text = report.read_text(encoding="utf-8")
    assert "P(gamma; 0, 3.1415926535897931)" in text
    assert float(values(report)[f"{sample('rotation.txt')}.det"]) == pytest.approx(1.0, abs=1e-9)


def test_tol_option_reaches_the_integrator(tmp_path):
    report = tmp_path / "transport.txt"
    assert cli.main(["transport", "--input", sample("flat.txt"), "--tol", "1e-8", "--report", str(report)]) == EXIT_OK
    assert float(values(report)["settings.rtol"]) == 1e-8


def test_input_errors():
    """Unreadable or unsuitable input gives exit status 2"""
    print("🧪 Testing input errors...")
    assert cli.main(["holonomy", "--input", sample("missing.txt")]) == EXIT_INPUT
    assert cli.main(["holonomy"]) == EXIT_INPUT
    assert cli.main(["holonomy", "--input", sample("flat.txt")]) == EXIT_INPUT
    assert cli.main(["glue", "--input", sample("flat.txt")]) == EXIT_INPUT
    assert cli.main(["transport", "--input", sample("flat.txt"), "--tol", "-1"]) == EXIT_INPUT
    print("✅ exit status 2")


def test_malformed_file(tmp_path):
    broken = tmp_path / "broken.txt"
    broken.write_text("[bundle]\nrank = 2\ndim = 2\nomega(1,2,1) = x1 *\n", encoding="utf-8")
    assert cli.main(["transport", "--input", str(broken)]) == EXIT_INPUT


def test_unsuitable_bundles_and_paths(tmp_path):
    """Degenerate or asymmetric forms and paths leaving the box are input errors"""
    header = "[bundle]\nrank = 2\ndim = 2\ndomain = [-2, 2] x [-2, 2]\n"
    cases = {
        "degenerate": header + "beta(1,1) = 0\n",
        "asymmetric": header + "beta(1,2) = 1\n",
        "escaping": header + "\n[path]\ngamma(1) = 5*t\ngamma(2) = 0\n",
    }
    for name, text in cases.items():
        broken = tmp_path / f"{name}.txt"
        broken.write_text(text, encoding="utf-8")
        assert cli.main(["transport", "--input", str(broken)]) == EXIT_INPUT, name


def test_evaluate(tmp_path):
    report = tmp_path / "evaluate.txt"
    assert cli.main(["evaluate", "--input", sample("flat.txt"), "--report", str(report)]) == EXIT_OK

    family = tmp_path / "family.txt"
    assert cli.main(["evaluate", "--input", sample("bordisms.txt"), "--grid", "3", "--report", str(family)]) == EXIT_OK
    found = values(family)
    assert found[f"{sample('bordisms.txt')}.fibers"] == "3"
    assert f"{sample('bordisms.txt')}.smoothness" in found
    assert found[f"{sample('bordisms.txt')}.incoming"] == "3"
    assert found[f"{sample('bordisms.txt')}.outgoing"] == "3"


def test_glue(tmp_path):
    report = tmp_path / "glue.txt"
    assert cli.main(["glue", "--input", sample("glue.txt"), "--report", str(report)]) == EXIT_OK
    assert values(report)[f"{sample('glue.txt')}.passed"] == "true"


def test_classify_closes_the_round_trip(tmp_path):
    print("🧪 Running `classify` on the classification sample...")
    report = tmp_path / "classify.txt"
    assert cli.main(["classify", "--input", sample("classify.txt"), "--report", str(report)]) == EXIT_OK
    found = values(report)
    assert float(found[f"{sample('classify.txt')}.max_deviation"]) <= 1e-6
    assert found[f"{sample('classify.txt')}.signature"] == "+1 +1"
    print("✅ classify deviation within 1e-6")


def test_verify_passes(tmp_path):
    """The full acceptance suite plus the checks on a shipped sample"""
    report = tmp_path / "verify.txt"
    assert cli.main(["verify", "--input", sample("compatible.txt"), "--report", str(report)]) == EXIT_OK
    assert values(report)["passed"] == "true"


def test_reports_are_deterministic(tmp_path):
    """Identical arguments give byte-identical reports"""
    first, second = tmp_path / "first.txt", tmp_path / "second.txt"
    for path in (first, second):
        assert cli.main(["evaluate", "--input", sample("compatible.txt"), "--seed", "3", "--report", str(path)]) == EXIT_OK
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


def main():
    print("🚀 Command-line tests")
    assert cli.main(["holonomy", "--input", sample("rotation.txt")]) == EXIT_OK
    test_input_errors()
    print("📊 done")


if __name__ == "__main__":
    main()
