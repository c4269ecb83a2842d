import io

import numpy as np
import pytest

from causalmed.data import (
    Binary,
    Categorical,
    CellState,
    Column,
    Continuous,
    Dataset,
    DescriptiveTable,
    ExclusionCounts,
    NONRESPONSE,
    RecodeRule,
    VariableRoles,
    describe,
    filter_analysis_rows,
    ingest_csv,
    recode,
    sgm_survey_rules,
    write_csv,
)
from causalmed.errors import DataError, InputError, RecodeError


def _ingest_text(text, schema, **kwargs):
    return ingest_csv(io.StringIO(text), schema, **kwargs)


class TestIngest:
    def test_empty_cell_becomes_missing(self):
        ds = _ingest_text(
            "a,b\n1,x\n,y\n3,x\n",
            {"a": Continuous(), "b": Categorical(("x", "y"), "x")},
            missing_tokens={""},
        )
        assert ds.n_rows == 3
        assert int((ds["a"].state == CellState.MISSING).sum()) == 1
        assert int((ds["b"].state == CellState.MISSING).sum()) == 0

    def test_undeclared_level_names_row_and_column(self):
        with pytest.raises(DataError, match=r"row 2.*'b'.*'purple'"):
            _ingest_text("a,b\n1,x\n2,purple\n", {"a": Continuous(), "b": Categorical(("x", "y"), "x")})

    def test_synthetic_survey_extract_shape(self):
        header = (
            "orientation,depression,poverty_ratio,support_freq,support_change,"
            "age,sex,race,education,year,weight"
        )
        lines = [
            "straight,No,2.5,Always,About the same,40,Male,White,HS,2020,1.2",
            "bisexual,Yes,1.1,Rarely,Less support,25,Female,Asian,BA,2021,0.8",
            "gay/lesbian,Yes,4.0,Usually,More support,33,Male,Black,BA,2020,1.0",
            "straight,No,6.2,Always,About the same,58,Female,White,MA,2021,1.5",
            "something else,No,0.9,Never,Less support,47,Female,Other,HS,2020,0.7",
        ]
        schema = {
            "orientation": Categorical(
                ("straight", "gay/lesbian", "bisexual", "something else"), "straight"
            ),
            "depression": Categorical(("Yes", "No"), "No"),
            "poverty_ratio": Continuous(),
            "support_freq": Categorical(("Always", "Usually", "Sometimes", "Rarely", "Never"), "Always"),
            "support_change": Categorical(("More support", "Less support", "About the same"), "More support"),
            "age": Continuous(),
            "sex": Binary(("Male", "Female"), "Male"),
            "race": Categorical(("AIAN", "Asian", "Black", "Other", "White"), "White"),
            "education": Categorical(("HS", "BA", "MA"), "HS"),
            "year": Binary(("2020", "2021"), "2020"),
            "weight": Continuous(),
        }
        ds = _ingest_text(header + "\n" + "\n".join(lines) + "\n", schema, weight_column="weight")
        assert len(ds.names) == 11
        assert ds.n_rows == 5

    def test_header_must_cover_schema(self):
        with pytest.raises(DataError, match="'b' not in header"):
            _ingest_text("a\n1\n", {"a": Continuous(), "b": Continuous()})

    def test_unparseable_number_names_row_and_column(self):
        with pytest.raises(DataError, match=r"row 1.*'a'.*'abc'"):
            _ingest_text("a\nabc\n", {"a": Continuous()})

    def test_missing_file(self):
        with pytest.raises(DataError, match="cannot read"):
            ingest_csv("/nonexistent/path.csv", {"a": Continuous()})

    def test_ragged_row(self):
        with pytest.raises(DataError, match="row 1"):
            _ingest_text("a,b\n1\n", {"a": Continuous(), "b": Continuous()})


class TestRoundTrip:
    def test_write_then_ingest_restores_dataset(self, tmp_path):
        kindc = Categorical(("lo", "hi"), "lo")
        ds = Dataset(
            {
                "x": Column.build(Continuous(), [1.25, None, 3e-7, NONRESPONSE, 0.1 + 0.2]),
                "g": Column.build(kindc, ["lo", "hi", None, "hi", NONRESPONSE]),
                "w": Column.build(Continuous(), [1.0, 2.0, 0.5, 1.0, 1.0]),
            },
            weight_column="w",
        )
        path = tmp_path / "ds.csv"
        write_csv(ds, path)
        back = ingest_csv(
            path,
            {"x": Continuous(), "g": kindc, "w": Continuous()},
            missing_tokens={""},
            nonresponse_tokens={"__NR__"},
            weight_column="w",
        )
        assert back == ds


class TestRecode:
    SCHEMA = {
        "orientation": Categorical(
            ("straight", "gay/lesbian", "bisexual", "something else", "Refused", "don't know"),
            "straight",
        ),
        "depression": Categorical(("Yes", "No", "Refused"), "No"),
    }

    def _dataset(self, orientation_cells, depression_cells):
        return Dataset(
            {
                "orientation": Column.build(self.SCHEMA["orientation"], orientation_cells),
                "depression": Column.build(self.SCHEMA["depression"], depression_cells),
            }
        )

    def test_sgm_coding(self):
        ds = self._dataset(
            ["bisexual", "straight", "Refused", "gay/lesbian", "something else", "don't know"],
            ["Yes", "No", "Yes", "No", "Refused", "Yes"],
        )
        out = recode(ds, sgm_survey_rules())
        col = out["orientation"]
        assert col.label(0) == "1"
        assert col.state[0] == CellState.OBSERVED
        assert col.label(1) == "0"
        assert col.state[2] == CellState.NONRESPONSE
        assert col.label(3) == "1"
        assert col.label(4) == "1"
        assert col.state[5] == CellState.NONRESPONSE
        dep = out["depression"]
        assert dep.label(0) == "1"
        assert dep.label(1) == "0"
        assert dep.state[4] == CellState.NONRESPONSE

    def test_unmapped_label_error(self):
        kind = Categorical(("a", "b", "zzz"), "a")
        ds = Dataset({"v": Column.build(kind, ["a", "zzz"])})
        rule = RecodeRule(Binary(), {"a": "0", "b": "1"})
        with pytest.raises(RecodeError, match="'zzz'"):
            recode(ds, {"v": rule})

    def test_unmapped_label_that_never_occurs_is_fine(self):
        kind = Categorical(("a", "b", "zzz"), "a")
        ds = Dataset({"v": Column.build(kind, ["a", "b"])})
        out = recode(ds, {"v": RecodeRule(Binary(), {"a": "0", "b": "1"})})
        assert out["v"].label(1) == "1"

    def test_idempotent_on_recoded_data(self):
        ds = self._dataset(["bisexual", "straight", "Refused"], ["Yes", "No", "No"])
        rules = sgm_survey_rules()
        once = recode(ds, rules)
        twice = recode(once, rules)
        assert twice == once

    def test_row_order_preserved(self):
        ds = self._dataset(
            ["straight", "bisexual", "straight", "gay/lesbian"], ["No", "Yes", "Yes", "No"]
        )
        out = recode(ds, sgm_survey_rules())
        assert [out["orientation"].label(i) for i in range(4)] == ["0", "1", "0", "1"]


def _roles_dataset(q_cells, y_cells, x_cells):
    return (
        Dataset(
            {
                "q": Column.build(Binary(), q_cells),
                "y": Column.build(Binary(), y_cells),
                "x": Column.build(Continuous(), x_cells),
            }
        ),
        VariableRoles(exposure="q", outcome="y", baseline_support="x"),
    )


class TestFilter:
    def test_nonresponse_rows_dropped_and_counted(self):
        q = ["1", "0", NONRESPONSE, "1", "0", "1", NONRESPONSE, "0", "1", "0"]
        ds, roles = _roles_dataset(q, ["1"] * 10, [1.0] * 10)
        out, counts = filter_analysis_rows(ds, roles, "complete_case")
        assert out.n_rows == 8
        assert counts == ExclusionCounts(nonresponse=2, missing=0, retained=8)

    def test_no_missing_returns_identical_dataset(self):
        ds, roles = _roles_dataset(["1", "0"], ["0", "1"], [1.0, 2.0])
        out, counts = filter_analysis_rows(ds, roles, "complete_case")
        assert out == ds
        assert counts.retained == 2

    def test_large_synthetic_exclusion_counts(self):
        n, flagged = 61050, 18719
        q = ["0"] * n
        y = ["1"] * n
        x = [1.0] * n
        for i in range(flagged):
            if i % 3 == 0:
                q[i] = NONRESPONSE
            else:
                x[i] = None
        ds, roles = _roles_dataset(q, y, x)
        out, counts = filter_analysis_rows(ds, roles, "complete_case")
        assert out.n_rows == 42331
        assert counts.retained == 42331
        assert counts.nonresponse + counts.missing == flagged

    def test_keep_missing_drops_only_nonresponse(self):
        q = ["1", NONRESPONSE, "0", "1"]
        x = [1.0, 2.0, None, 4.0]
        ds, roles = _roles_dataset(q, ["1", "0", "1", "0"], x)
        out, counts = filter_analysis_rows(ds, roles, "keep_missing_for_imputation")
        assert out.n_rows == 3
        assert counts.nonresponse == 1
        assert (out["x"].state == CellState.MISSING).sum() == 1

    def test_empty_result_is_error(self):
        ds, roles = _roles_dataset([NONRESPONSE, NONRESPONSE], ["1", "0"], [1.0, 2.0])
        with pytest.raises(DataError, match="no analyzable rows"):
            filter_analysis_rows(ds, roles, "complete_case")

    def test_unknown_policy(self):
        ds, roles = _roles_dataset(["1"], ["1"], [1.0])
        with pytest.raises(InputError):
            filter_analysis_rows(ds, roles, "bogus")


class TestDescribe:
    def test_continuous_means_by_stratum(self):
        ds = Dataset(
            {
                "g": Column.build(Binary(("A", "B"), "A"), ["A", "A", "B"]),
                "v": Column.build(Continuous(), [1.0, 3.0, 5.0]),
            }
        )
        table = describe(ds, "g", ["v"])
        by_stratum = {r.stratum: r for r in table.rows}
        assert by_stratum["A"].mean == pytest.approx(2.0)
        assert by_stratum["B"].mean == pytest.approx(5.0)
        assert by_stratum["A"].n == 2

    def test_single_level_stratum_is_100pct(self):
        ds = Dataset(
            {
                "g": Column.build(Binary(("A", "B"), "A"), ["A", "A", "B"]),
                "v": Column.build(Binary(("No", "Yes"), "No"), ["Yes", "Yes", "No"]),
            }
        )
        table = describe(ds, "g", ["v"])
        row = next(r for r in table.rows if r.stratum == "A" and r.level == "Yes")
        assert row.pct == pytest.approx(100.0)
        assert row.n == 2

    def test_depression_prevalence_cell(self):
        n_sgm, n_dep = 1881, 808
        g = ["1"] * n_sgm + ["0"] * 100
        v = ["Yes"] * n_dep + ["No"] * (n_sgm - n_dep) + ["No"] * 100
        ds = Dataset(
            {
                "g": Column.build(Binary(), g),
                "dep": Column.build(Binary(("No", "Yes"), "No"), v),
            }
        )
        table = describe(ds, "g", ["dep"])
        row = next(r for r in table.rows if r.stratum == "1" and r.level == "Yes")
        assert row.n == 808
        assert round(row.pct, 2) == 42.96

    def test_percentages_sum_to_100(self):
        rng = np.random.default_rng(7)
        kind = Categorical(("a", "b", "c"), "a")
        cells = [("a", "b", "c")[i] for i in rng.integers(0, 3, size=500)]
        miss = rng.random(500) < 0.1
        cells = [None if m else c for c, m in zip(cells, miss)]
        ds = Dataset(
            {
                "g": Column.build(Binary(), [("0", "1")[i] for i in rng.integers(0, 2, size=500)]),
                "v": Column.build(kind, cells),
            }
        )
        table = describe(ds, "g", ["v"])
        for stratum in ("0", "1"):
            total = sum(r.pct for r in table.rows if r.stratum == stratum and r.pct is not None)
            assert total == pytest.approx(100.0, abs=0.01)

    def test_unknown_column(self):
        ds = Dataset({"g": Column.build(Binary(), ["0", "1"])})
        with pytest.raises(InputError):
            describe(ds, "g", ["nope"])

    def test_csv_serialization_header(self):
        ds = Dataset(
            {
                "g": Column.build(Binary(), ["0", "1"]),
                "v": Column.build(Continuous(), [1.0, 2.0]),
            }
        )
        buf = io.StringIO()
        describe(ds, "g", ["v"]).to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "variable,level,stratum,n,pct,mean,sd"


class TestDatasetInvariants:
    def test_negative_weight_rejected(self):
        with pytest.raises(DataError, match="non-negative"):
            Dataset(
                {"w": Column.build(Continuous(), [1.0, -0.5])},
                weight_column="w",
            )

    def test_weight_column_must_be_complete(self):
        with pytest.raises(DataError, match="unobserved"):
            Dataset({"w": Column.build(Continuous(), [1.0, None])}, weight_column="w")

    def test_unequal_lengths_rejected(self):
        with pytest.raises(DataError, match="unequal"):
            Dataset(
                {
                    "a": Column.build(Continuous(), [1.0]),
                    "b": Column.build(Continuous(), [1.0, 2.0]),
                }
            )

    def test_reference_must_be_level(self):
        with pytest.raises(InputError):
            Categorical(("a", "b"), "c")
        with pytest.raises(InputError):
            Binary(("a", "a"), "a")

    def test_take_preserves_kinds(self):
        ds = Dataset(
            {
                "a": Column.build(Continuous(), [1.0, 2.0, 3.0]),
                "g": Column.build(Binary(), ["0", "1", None]),
            }
        )
        sub = ds.take(np.array([2, 0]))
        assert sub.n_rows == 2
        assert sub["g"].state[0] == CellState.MISSING
        assert sub["a"].values[1] == 1.0
