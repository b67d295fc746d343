import pytest

from spdsim import load_architecture, parse_spd, read_architecture, read_spd
from spdsim.experiment import resolve_path

RUNNING_EXAMPLE = """\
spd "RMUC" {
  target elastic-infrastructure "Elastic RMUC" {
    unit container "rmuc-node"
    constraint size min 1 max 4
  }
  policy "Scale Out RMUC" active {
    target "Elastic RMUC"
    trigger fire-on-value cpu-utilization window 60s avg > 40%
    adjust step +1
    constraint cooldown 180s
  }
}
"""

# One container at 1000 wu/s, one user, constant demand and think time.
DETERMINISTIC_ARCH = """\
architecture "single" {
  container "node" rate 1000
  component "Worker" { operation "run" { cpu 500 } }
  assembly "worker" component "Worker"
  allocate "worker" -> "node"
  usage { population 1 think 10s scenario { 1.0 call "worker" "run" } }
}
"""

# Two service groups on one elastic node plus a rigid database.
SMALL_ARCH = """\
architecture "small" {
  container "node" rate 1000
  container "db-node" rate 1000
  queue "jobs" consumer "worker" operation "work"
  component "Front" { operation "handle" { cpu exp(20) call "back" "work" send "jobs" } }
  component "Back" { operation "work" { cpu exp(30) call "db" "put" } }
  component "Store" { operation "put" { cpu 5 } }
  assembly "front" component "Front" { wire "back" -> "worker" }
  assembly "worker" component "Back" { wire "db" -> "db" }
  assembly "db" component "Store"
  allocate "front" -> "node"
  allocate "worker" -> "node"
  allocate "db" -> "db-node"
  usage { population 20 think exp(5s) scenario { 1.0 call "front" "handle" } }
}
"""


def two_group_spd(ei_policy=True, extra=""):
    if ei_policy:
        policy = """
  policy "grow" {
    target "nodes"
    trigger fire-on-value cpu-utilization window 30s avg > 30%
    adjust step +1
  }"""
    else:
        policy = """
  policy "grow front" {
    target "front"
    trigger fire-on-value cpu-utilization window 30s avg > 30%
    adjust step +1
  }"""
    return f"""
spd "small" {{
  target elastic-infrastructure "nodes" {{ unit container "node" constraint size max 4 }}
  target service-group "front" {{ unit assembly "front" hosted-on "nodes" }}
  target service-group "back" {{ unit assembly "worker" hosted-on "nodes" }}
{policy}
{extra}
}}
"""


@pytest.fixture(scope="session")
def rmuc_arch():
    return read_architecture(resolve_path("rmuc:rmuc.arch"))


@pytest.fixture(scope="session")
def rmuc_spd():
    def load(name):
        return read_spd(resolve_path(f"rmuc:{name}.spd"))
    return load


@pytest.fixture
def running_example():
    return parse_spd(RUNNING_EXAMPLE)


@pytest.fixture
def small_arch():
    return load_architecture(SMALL_ARCH)


@pytest.fixture
def deterministic_arch():
    return load_architecture(DETERMINISTIC_ARCH)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)
