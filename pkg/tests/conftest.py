import json
from pathlib import Path

import pytest

from tdmcheck import gen_bus, gen_clique, gen_ring, make_config, parse_schedule

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_config(name: str, allow_invalid: bool = False):
    return parse_schedule(fixture_text(name), allow_invalid=allow_invalid)


def golden_counts() -> dict:
    return json.loads((GOLDEN / "expected_counts.json").read_text(encoding="utf-8"))


def seq_idata(n: int):
    return [10 * (i + 1) for i in range(n)]


def battery():
    """The small valid fixtures (N <= 3, K <= 2) used all over the suite."""
    out = [("clique_1x1", make_config(gen_clique(1, 1), [50]))]
    for n in (2, 3):
        for k in (1, 2):
            out.append(
                ("clique_%dx%d" % (n, k), make_config(gen_clique(n, k), seq_idata(n)))
            )
            out.append(
                ("bus_%dx%d" % (n, k), make_config(gen_bus(n, k), seq_idata(n)))
            )
    for k in (1, 2):
        out.append(("ring_3x%d" % k, make_config(gen_ring(3, k), [1, 2, 3])))
    for name in ("varying_a", "varying_b", "varying_c"):
        out.append((name, fixture_config(name + ".sched")))
    return out


@pytest.fixture(scope="session")
def golden():
    return golden_counts()
