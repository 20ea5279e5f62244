from __future__ import annotations

import pytest

from robosync.model import (
    M,
    S,
    SP,
    T,
    builtin_p,
    color_view,
    make_configuration,
    parse_support,
    render_support,
)
from robosync.protocols import ProtocolKind


def test_color_view_examples():
    assert color_view(make_configuration([T, T])) == {T}
    assert color_view(make_configuration([T, S, SP])) == {T, S, SP}
    assert color_view(make_configuration([M, M, S, S])) == {M, S}


def test_support_rendering_uses_canonical_order():
    assert render_support({M, T}) == "T,M"
    assert render_support({SP, S, M, T}) == "T,M,S,S'"
    assert parse_support("T,M") == frozenset({T, M})


def test_builtin_stay():
    p = builtin_p("stay")
    snap_entries = ((0.0, 0.0, 0), (2.0, 0.0, 0))
    from robosync.model import PSnapshot

    dest, sim = p.decide(PSnapshot(own_sim=0, entries=snap_entries))
    assert dest == (0.0, 0.0)
    assert sim == 0


def test_builtin_midpoint():
    p = builtin_p("midpoint")
    from robosync.model import PSnapshot

    dest, _ = p.decide(PSnapshot(own_sim=0, entries=((0.0, 0.0, 0), (2.0, 0.0, 0))))
    assert dest == (1.0, 0.0)


def test_builtin_color_cycle():
    p = builtin_p("color_cycle(3)")
    from robosync.model import PSnapshot

    _, sim = p.decide(PSnapshot(own_sim=2, entries=((0.0, 0.0, 2),)))
    assert sim == 0
    assert builtin_p("color_cycle:4").k == 4


def test_builtin_unknown_name():
    with pytest.raises(ValueError):
        builtin_p("teleport")


def test_color_set_sizes():
    assert len(ProtocolKind.SIM_RS_S.colors) == 4
    assert len(ProtocolKind.SS_SIM_RS_S.colors) == 4
    assert len(ProtocolKind.SIM_RS_A.colors) == 5
    assert len(ProtocolKind.SS_SIM_RS_A.colors) == 5
    assert len(ProtocolKind.SIM2_RS_A.colors) == 3


def test_configuration_rejects_single_robot():
    with pytest.raises(ValueError):
        make_configuration([T])
