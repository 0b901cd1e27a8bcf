import csv
import io

import pytest

import pik.tables as tables
from pik.commat import gen_copt
from pik.implsearch import SearchBudget, SearchStatus, SearchVerdict, SystemSpec
from pik.tables import (
    Cell,
    CellStatus,
    CommTable,
    build_table,
    check_table_consistency,
    inconsistent_fixtures,
    render_csv,
    render_grid,
)
from pik.ultraweak import check_certificate, copt_chain

QUBIT, REBIT = SystemSpec("qubit"), SystemSpec("rebit")
QUTRIT = SystemSpec("qudit", 3)
FAST = SearchBudget(restarts=1, iters=60)


@pytest.fixture(scope="module")
def built():
    return {str(s): build_table(s, 4, FAST) for s in (QUBIT, REBIT, QUTRIT)}


def certified_pairs(n_max):
    """All (smaller, larger) pairs with a verified chain certificate, found
    pair by pair rather than through the table's own edge closure."""
    nodes = CommTable.pairs(n_max)
    out = []
    for a in nodes:
        for b in nodes:
            if a == b:
                continue
            cert = copt_chain(a, b)
            if cert is not None and check_certificate(gen_copt(*a), gen_copt(*b), cert):
                out.append((a, b))
    return out


def test_qubit_table(built):
    t = built["qubit"]
    assert t.with_status(CellStatus.IMPLEMENTABLE) == [(2, 1), (3, 1), (4, 1)]
    assert t.with_status(CellStatus.IMPOSSIBLE) == [(3, 2), (4, 2), (4, 3)]


def test_rebit_table(built):
    t = built["rebit"]
    assert t.with_status(CellStatus.IMPLEMENTABLE) == [(2, 1), (3, 1)]
    assert t.with_status(CellStatus.UNKNOWN) == []


def test_qubit_and_rebit_tables_differ(built):
    assert built["qubit"].cells[(4, 1)].status is not built["rebit"].cells[(4, 1)].status


def test_qutrit_table(built):
    t = built["qudit:3"]
    assert t.cells[(4, 2)].status is CellStatus.IMPLEMENTABLE
    assert "qutrit-c42" in t.cells[(4, 2)].provenance
    assert t.cells[(4, 3)].status is CellStatus.IMPOSSIBLE


def test_every_cell_has_provenance(built):
    for t in built.values():
        t.validate()
        assert all(c.provenance for c in t.cells.values())


def test_built_tables_are_consistent(built):
    for t in built.values():
        assert check_table_consistency(t) == []


def test_monotone_under_certified_relations(built):
    pairs = certified_pairs(4)
    assert ((3, 1), (4, 2)) in pairs and ((3, 2), (4, 3)) in pairs
    for t in built.values():
        for small, large in pairs:
            if t.cells[large].status is CellStatus.IMPLEMENTABLE:
                assert t.cells[small].status is not CellStatus.IMPOSSIBLE


def test_tables_are_deterministic(built):
    again = build_table(QUTRIT, 4, FAST)
    assert again.to_dict() == built["qudit:3"].to_dict()


@pytest.mark.parametrize("name", ["c42-without-c31", "c43-without-c32"])
def test_fixtures_are_flagged(name):
    violations = check_table_consistency(inconsistent_fixtures()[name])
    assert violations
    assert all(v.smaller != v.larger for v in violations)


def test_c42_without_c31_names_the_pair():
    table = CommTable.from_statuses(4, [(2, 1), (4, 2)])
    violations = check_table_consistency(table)
    assert any(v.smaller == (3, 1) and v.larger == (4, 2) for v in violations)
    assert any(str(v).startswith("C^opt_{3,1} is marked impossible") for v in violations)


def test_violations_match_independent_oracle():
    pairs = certified_pairs(4)
    for table in inconsistent_fixtures().values():
        expected = {(a, b) for a, b in pairs
                    if table.cells[a].status is CellStatus.IMPOSSIBLE
                    and table.cells[b].status is CellStatus.IMPLEMENTABLE}
        got = {(v.smaller, v.larger) for v in check_table_consistency(table)}
        assert got == expected


def test_unknown_cells_are_closed_under_the_order(monkeypatch):
    # pretend the search resolves only C^opt_{4,2} (yes) and C^opt_{4,3} (no)
    def fake(C, sys, budget=None):
        shape = (C.cols, C.cols - sum(1 for x in C.data[0] if x))
        if shape == (4, 2):
            return SearchVerdict(SearchStatus.REALIZABLE, provenance="stub")
        if shape == (4, 3):
            return SearchVerdict(SearchStatus.IMPOSSIBLE, provenance="stub")
        return SearchVerdict(SearchStatus.UNKNOWN, provenance="stub")

    monkeypatch.setattr(tables, "find_implementation", fake)
    t = build_table(QUTRIT, 4)
    for node in [(2, 1), (3, 1), (4, 1)]:
        assert t.cells[node].status is CellStatus.IMPLEMENTABLE
        assert t.cells[node].provenance.startswith("closure:below")
    # C^opt_{4,2} has no three rows with disjoint supports, so id_3 is not below it
    assert t.cells[(3, 2)].status is CellStatus.UNKNOWN
    assert t.cells[(4, 3)].status is CellStatus.IMPOSSIBLE
    assert check_table_consistency(t) == []


def test_impossibility_propagates_upwards(monkeypatch):
    def fake(C, sys, budget=None):
        shape = (C.cols, C.cols - sum(1 for x in C.data[0] if x))
        if shape == (3, 2):
            return SearchVerdict(SearchStatus.IMPOSSIBLE, provenance="stub")
        return SearchVerdict(SearchStatus.UNKNOWN, provenance="stub")

    monkeypatch.setattr(tables, "find_implementation", fake)
    t = build_table(QUTRIT, 4)
    assert t.cells[(4, 3)].status is CellStatus.IMPOSSIBLE
    assert t.cells[(4, 3)].provenance.startswith("closure:above")
    assert t.cells[(2, 1)].status is CellStatus.UNKNOWN


def test_csv_columns(built):
    rows = list(csv.reader(io.StringIO(render_csv(built["qubit"]))))
    assert rows[0] == ["n", "t", "status", "provenance"]
    assert len(rows) == 1 + 6
    assert rows[1][:3] == ["2", "1", "implementable"]


def test_grid_shape(built):
    lines = render_grid(built["rebit"]).splitlines()
    assert lines[0].split() == ["n\\t", "1", "2", "3"]
    assert [ln.split()[0] for ln in lines[1:4]] == ["2", "3", "4"]
    assert lines[3].split()[1:] == ["✗", "✗", "✗"]
    assert lines[2].split()[1:] == ["✓", "✗"]


def test_table_validation():
    with pytest.raises(ValueError):
        CommTable(None, 1)
    with pytest.raises(ValueError):
        build_table(QUBIT, 1)
    partial = CommTable(None, 3, {(2, 1): Cell(CellStatus.UNKNOWN)})
    with pytest.raises(ValueError):
        partial.validate()


def test_to_dict_lists_every_cell(built):
    d = built["qudit:3"].to_dict()
    assert d["system"] == "qudit:3" and d["n_max"] == 4
    assert [(c["n"], c["t"]) for c in d["cells"]] == CommTable.pairs(4)
