"""Diagnostic payloads: aggregation, codec, topology planning."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from nfcbms import diagnostics as dg
from nfcbms.errors import DuplicatePackId, EmptyInput, RangeViolation, Truncated


def make_report(n: int = 0, cells: int = 4) -> dg.BpcReport:
    return dg.BpcReport(
        pack_id=bytes([n]) * 8,
        timestamp=1_700_000_000 + n,
        soc_permille=875,
        soh_permille=990,
        cell_voltages_mv=tuple(3700 + i for i in range(cells)),
        temperatures_dk=(2931, 2945),
        status_flags=int(dg.StatusFlags.STORED),
    )


# --- aggregation ---


def test_collect_preserves_order():
    reports = [make_report(1), make_report(2), make_report(3)]
    packet = dg.collect_from_bpcs(reports, seq=9)
    assert packet.use_case == dg.UseCase.ACTIVE_DIAG
    assert packet.origin == dg.Origin.BMS_CONTROLLER
    assert packet.sequence_no == 9
    assert [r.pack_id for r in packet.reports] == [r.pack_id for r in reports]


def test_collect_duplicate_pack_id_rejected():
    with pytest.raises(DuplicatePackId):
        dg.collect_from_bpcs([make_report(1), make_report(1)], seq=0)


def test_collect_empty_rejected():
    with pytest.raises(EmptyInput):
        dg.collect_from_bpcs([], seq=0)


def test_collect_single_report_is_valid():
    # centralized topology degenerate case: one controller, one packet
    packet = dg.collect_from_bpcs([make_report(1)], seq=0)
    assert len(packet.reports) == 1


def test_idle_packet_carries_exactly_one_report():
    packet = dg.idle_packet(make_report(1), seq=3)
    assert packet.use_case == dg.UseCase.IDLE_DIAG
    bad = dg.DiagPacket(
        use_case=dg.UseCase.IDLE_DIAG,
        origin=dg.Origin.BPC,
        reports=(make_report(1), make_report(2)),
        sequence_no=0,
    )
    with pytest.raises(RangeViolation):
        bad.validate()


# --- codec ---


def test_golden_one_report_packet():
    packet = dg.idle_packet(
        dg.BpcReport(
            pack_id=bytes.fromhex("0102030405060708"),
            timestamp=1_700_000_000,
            soc_permille=875,
            soh_permille=990,
            cell_voltages_mv=(3701, 3702, 3703, 3704),
            temperatures_dk=(2931, 2945),
            status_flags=0x0010,
        ),
        seq=7,
    )
    assert dg.encode_diag(packet).hex() == (
        "0201000000070001"
        "0102030405060708"
        "000000006553f100"
        "036b03de0010"
        "040e750e760e770e78"
        "020b730b81"
    )


def test_roundtrip_fixed():
    packet = dg.collect_from_bpcs([make_report(1), make_report(2)], seq=77)
    assert dg.decode_diag(dg.encode_diag(packet)) == packet


report_strategy = st.builds(
    dg.BpcReport,
    pack_id=st.binary(min_size=8, max_size=8),
    timestamp=st.integers(min_value=0, max_value=(1 << 64) - 1),
    soc_permille=st.integers(min_value=0, max_value=1000),
    soh_permille=st.integers(min_value=0, max_value=1000),
    cell_voltages_mv=st.lists(
        st.integers(min_value=0, max_value=5000), min_size=1, max_size=32
    ).map(tuple),
    temperatures_dk=st.lists(
        st.integers(min_value=-(1 << 15), max_value=(1 << 15) - 1), max_size=8
    ).map(tuple),
    status_flags=st.integers(min_value=0, max_value=0xFFFF),
)


@given(
    st.lists(report_strategy, min_size=1, max_size=5),
    st.integers(min_value=0, max_value=(1 << 32) - 1),
)
def test_roundtrip_random_packets(reports, seq):
    packet = dg.DiagPacket(
        use_case=dg.UseCase.ACTIVE_DIAG,
        origin=dg.Origin.BMS_CONTROLLER,
        reports=tuple(reports),
        sequence_no=seq,
    )
    decoded = dg.decode_diag(dg.encode_diag(packet))
    assert decoded == packet


def test_soc_out_of_range_rejected():
    report = dg.BpcReport(
        pack_id=bytes(8),
        timestamp=0,
        soc_permille=1001,
        soh_permille=0,
        cell_voltages_mv=(3700,),
        temperatures_dk=(),
    )
    packet = dg.DiagPacket(dg.UseCase.ACTIVE_DIAG, dg.Origin.BPC, (report,), 0)
    with pytest.raises(RangeViolation):
        dg.encode_diag(packet)


def test_decode_truncated():
    raw = dg.encode_diag(dg.collect_from_bpcs([make_report(1)], seq=0))
    with pytest.raises(Truncated):
        dg.decode_diag(raw[:-1])
    with pytest.raises(Truncated):
        dg.decode_diag(raw + b"\x00")
    with pytest.raises(Truncated):
        dg.decode_diag(raw[:5])


def test_decode_bad_use_case():
    raw = bytearray(dg.encode_diag(dg.collect_from_bpcs([make_report(1)], seq=0)))
    raw[0] = 0x77
    with pytest.raises(RangeViolation):
        dg.decode_diag(bytes(raw))


def test_decode_soc_out_of_range():
    raw = bytearray(dg.encode_diag(dg.collect_from_bpcs([make_report(1)], seq=0)))
    # soc lives right after the header (8) + pack_id (8) + timestamp (8)
    raw[24:26] = (1001).to_bytes(2, "big")
    with pytest.raises(RangeViolation):
        dg.decode_diag(bytes(raw))


def test_json_roundtrip():
    packet = dg.collect_from_bpcs([make_report(4), make_report(5)], seq=2)
    assert dg.packet_from_json(dg.packet_to_json(packet)) == packet


# --- topology ---


def test_topology_centralized():
    plan = dg.topology_plan(dg.Topology.CENTRALIZED, 1)
    assert (plan.ntag_count, plan.reader_count, plan.idle_feasible) == (1, 1, False)


def test_topology_distributed_four_modules():
    plan = dg.topology_plan(dg.Topology.DISTRIBUTED, 4)
    assert (plan.ntag_count, plan.reader_count, plan.idle_feasible) == (5, 5, True)


def test_topology_modulated_matches_distributed_rule():
    assert dg.topology_plan(dg.Topology.MODULATED, 3) == dg.topology_plan(
        dg.Topology.DISTRIBUTED, 3
    )


def test_topology_decentralized_sums_subsystems():
    plan = dg.topology_plan(
        dg.Topology.DECENTRALIZED,
        subsystems=[(dg.Topology.DISTRIBUTED, 2), (dg.Topology.DISTRIBUTED, 3)],
    )
    two = dg.topology_plan(dg.Topology.DISTRIBUTED, 2)
    three = dg.topology_plan(dg.Topology.DISTRIBUTED, 3)
    assert plan.ntag_count == two.ntag_count + three.ntag_count == 7
    assert plan.reader_count == two.reader_count + three.reader_count == 7
    assert plan.idle_feasible


def test_topology_monotone_in_module_count():
    for topology in (dg.Topology.MODULATED, dg.Topology.DISTRIBUTED):
        counts = [dg.topology_plan(topology, n).ntag_count for n in range(1, 10)]
        assert counts == sorted(counts)
        assert len(set(counts)) == len(counts)


def test_decentralized_requires_subsystems():
    with pytest.raises(EmptyInput):
        dg.topology_plan(dg.Topology.DECENTRALIZED)
