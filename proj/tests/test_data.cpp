#include "debm/data.hpp"
#include "debm/errors.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace debm;

namespace {

Dataset parse(const std::string& text, const Schema& schema)
{
    std::istringstream in(text);
    return read_dataset(in, schema, "test.csv");
}

Schema basic_schema()
{
    Schema s;
    s.columns = {{"id", ColumnRole::Id}, {"dx", ColumnRole::Diagnosis}, {"age", ColumnRole::Covariate}};
    s.default_role = ColumnRole::Biomarker;
    return s;
}

std::string error_of(const std::string& text, const Schema& schema)
{
    try {
        (void)parse(text, schema);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("diagnosis and role labels")
{
    CHECK(parse_diagnosis("cn") == Diagnosis::CN);
    CHECK(parse_diagnosis(" MCI ") == Diagnosis::MCI);
    CHECK(parse_diagnosis("Ad") == Diagnosis::AD);
    CHECK(!parse_diagnosis("NL"));
    CHECK(to_string(Diagnosis::MCI) == "MCI");
    CHECK(parse_role("covariate") == ColumnRole::Covariate);
    CHECK(!parse_role("weight"));
    for (auto r : {ColumnRole::Id, ColumnRole::Diagnosis, ColumnRole::Biomarker, ColumnRole::Covariate, ColumnRole::Ignore})
        CHECK(parse_role(to_string(r)) == r);
}

TEST_CASE("split_csv_line")
{
    CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_csv_line("\"x,y\",\"say \"\"hi\"\"\"\r") == std::vector<std::string>{"x,y", "say \"hi\""});
    CHECK(split_csv_line("") == std::vector<std::string>{""});
}

TEST_CASE("read_dataset parses roles, missing cells and covariates")
{
    const std::string text = "id,dx,age,hippo,\"abeta\",note\n"
                             "s1,CN,70,1.5,200,\"a, b\"\n"
                             "\n"
                             "s2,AD,,0.9,,x\n"
                             "s3,mci,81.5,1e-1,+150,\n";
    Schema s = basic_schema();
    s.columns.emplace_back("note", ColumnRole::Ignore);
    const Dataset ds = parse(text, s);
    ds.validate();
    REQUIRE(ds.n_subjects() == 3);
    CHECK(ds.subject_ids == std::vector<std::string>{"s1", "s2", "s3"});
    CHECK(ds.diagnoses == std::vector<Diagnosis>{Diagnosis::CN, Diagnosis::AD, Diagnosis::MCI});
    CHECK(ds.biomarker_names == std::vector<std::string>{"hippo", "abeta"});
    CHECK(ds.covariate_names == std::vector<std::string>{"age"});
    CHECK(ds.biomarkers(2, 0) == 0.1);
    CHECK(ds.biomarkers(2, 1) == 150.0);
    CHECK(ds.missing(1, 1));
    CHECK(is_missing(ds.covariates(1, 0)));
    CHECK(ds.covariates(2, 0) == 81.5);
    CHECK(ds.count(Diagnosis::AD) == 1);
    CHECK(ds.biomarker_index("abeta") == 1);
    CHECK_THROWS_AS(ds.biomarker_index("tau"), InputError);
}

TEST_CASE("read_dataset without id column numbers subjects; aliases and log transform")
{
    Schema s;
    s.columns = {{"diagnosis", ColumnRole::Diagnosis}};
    s.default_role = ColumnRole::Biomarker;
    s.label_aliases = {{"NL", Diagnosis::CN}, {"Dementia", Diagnosis::AD}};
    s.log_transform = {"v"};
    const Dataset ds = parse("diagnosis,v\nNL,1\nDementia,2.718281828459045\n", s);
    CHECK(ds.subject_ids == std::vector<std::string>{"1", "2"});
    CHECK(ds.diagnoses[0] == Diagnosis::CN);
    CHECK(ds.biomarkers(0, 0) == 0.0);
    CHECK(ds.biomarkers(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(error_of("diagnosis,v\nNL,0\n", s).find("log transform") != std::string::npos);
}

TEST_CASE("read_dataset errors name the row and column")
{
    const Schema s = basic_schema();
    CHECK(error_of("", s).find("empty file") != std::string::npos);
    CHECK(error_of("id,age,v\n1,2,3\n", s).find("'dx' not in header") != std::string::npos);
    CHECK(error_of("id,dx,age,v\n1,CN,70\n", s).find("row 2: expected 4 fields, got 3") != std::string::npos);
    CHECK(error_of("id,dx,age,v\n1,CN,70,1\n2,XX,70,1\n", s).find("row 3: unknown diagnosis label 'XX'") !=
          std::string::npos);
    CHECK(error_of("id,dx,age,v\n1,CN,70,abc\n", s).find("row 2, column 'v': non-numeric value 'abc'") !=
          std::string::npos);
    CHECK(error_of("id,dx,age,v\n1,CN,seventy,1\n", s).find("column 'age'") != std::string::npos);
    CHECK(error_of("id,dx,age,v\n1,CN,70,inf\n", s).find("non-numeric") != std::string::npos);
    Schema none = s;
    none.default_role = ColumnRole::Ignore;
    CHECK(error_of("id,dx,age,v\n1,CN,70,1\n", none).find("no biomarker columns") != std::string::npos);
    Schema two = s;
    two.columns.emplace_back("v", ColumnRole::Diagnosis);
    CHECK(error_of("id,dx,age,v\n1,CN,70,CN\n", two).find("more than one diagnosis") != std::string::npos);
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", s), InputError);
}

TEST_CASE("infer_schema")
{
    const Schema s = infer_schema({"RID", "DX", "Ventricles", "Hippocampus"});
    CHECK(s.role_of("RID") == ColumnRole::Id);
    CHECK(s.role_of("DX") == ColumnRole::Diagnosis);
    CHECK(s.role_of("Ventricles") == ColumnRole::Biomarker);
    CHECK(s.has_role(ColumnRole::Id));
    CHECK(!s.has_role(ColumnRole::Covariate));
}

TEST_CASE("write_dataset round trip is exact")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    Dataset ds;
    for (int r = 0; r < 40; ++r) {
        ds.subject_ids.push_back("s" + std::to_string(r));
        ds.diagnoses.push_back(static_cast<Diagnosis>(r % 3));
    }
    ds.biomarker_names = {"a", "b", "c"};
    ds.covariate_names = {"age"};
    ds.biomarkers.resize(40, 3);
    ds.covariates.resize(40, 1);
    for (int r = 0; r < 40; ++r) {
        for (int c = 0; c < 3; ++c) ds.biomarkers(r, c) = (r + c) % 7 == 0 ? missing_value : z(rng) * 1e3;
        ds.covariates(r, 0) = r % 11 == 0 ? missing_value : 60 + z(rng);
    }
    ds.unadjusted = BoolMatrix::Constant(40, 3, false);
    std::ostringstream out;
    write_dataset(out, ds);
    Schema s;
    s.columns = {{"id", ColumnRole::Id}, {"dx", ColumnRole::Diagnosis}, {"age", ColumnRole::Covariate}};
    s.default_role = ColumnRole::Biomarker;
    const Dataset back = parse(out.str(), s);
    CHECK(back.subject_ids == ds.subject_ids);
    CHECK(back.diagnoses == ds.diagnoses);
    for (int r = 0; r < 40; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(back.missing(r, c) == ds.missing(r, c));
            if (!ds.missing(r, c)) CHECK(back.biomarkers(r, c) == ds.biomarkers(r, c));
        }
        if (!is_missing(ds.covariates(r, 0))) CHECK(back.covariates(r, 0) == ds.covariates(r, 0));
    }
}

TEST_CASE("rows and columns")
{
    const Dataset ds = parse("id,dx,age,a,b\n1,CN,1,10,20\n2,AD,2,11,21\n3,MCI,3,12,22\n", basic_schema());
    const Dataset r = ds.rows({2, 0, 2});
    CHECK(r.subject_ids == std::vector<std::string>{"3", "1", "3"});
    CHECK(r.biomarkers(1, 1) == 20);
    CHECK(r.covariates(0, 0) == 3);
    CHECK_THROWS_AS(ds.rows({5}), InputError);
    const Dataset c = ds.columns({"b", "a"});
    CHECK(c.biomarker_names == std::vector<std::string>{"b", "a"});
    CHECK(c.biomarkers(1, 0) == 21);
    CHECK(c.covariate_names == ds.covariate_names);
    CHECK_THROWS_AS(ds.columns({"zz"}), InputError);
}

TEST_CASE("residualization removes the CN-fitted linear trend")
{
    // CN: v = 2 + 0.5 age exactly, so the coefficients are recovered to rounding
    std::string text = "id,dx,age,v\n";
    for (int i = 0; i < 10; ++i) text += std::to_string(i) + ",CN," + std::to_string(60 + i) + "," + std::to_string(2 + 0.5 * (60 + i)) + "\n";
    text += "a1,AD,70,50\n";
    text += "a2,AD,,50\n";
    const Dataset ds = parse(text, basic_schema());
    const ResidualFit f = fit_residualization(ds, "v", {"age"});
    CHECK(f.coefficients(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(f.coefficients(1) == doctest::Approx(0.5).epsilon(1e-9));
    const Dataset r = apply_residualization(ds, f);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(r.biomarkers(i, 0)) < 1e-9);
    CHECK(r.biomarkers(10, 0) == doctest::Approx(50 - 37.0));
    // missing covariate: raw value kept and flagged
    CHECK(r.biomarkers(11, 0) == 50);
    CHECK(r.unadjusted(11, 0));
    CHECK(!r.unadjusted(10, 0));

    ResidualizationStep step{{"v"}, {"age"}};
    const Residualized rs = residualize_steps(ds, {step});
    CHECK(rs.fits.size() == 1);
    CHECK(rs.data.biomarkers(10, 0) == r.biomarkers(10, 0));
}

TEST_CASE("residualization preconditions")
{
    const Dataset few = parse("id,dx,age,v\n1,CN,60,1\n2,CN,61,2\n3,AD,70,5\n", basic_schema());
    CHECK_THROWS_WITH_AS(fit_residualization(few, "v", {"age"}),
                         doctest::Contains("need at least 3 CN subjects"), InputError);
    const Dataset flat = parse("id,dx,age,v\n1,CN,60,1\n2,CN,60,2\n3,CN,60,3\n4,CN,60,2\n", basic_schema());
    CHECK_THROWS_WITH_AS(fit_residualization(flat, "v", {"age"}), doctest::Contains("rank deficient"), InputError);
    CHECK_THROWS_AS(fit_residualization(flat, "v", {"sex"}), InputError);
}

TEST_CASE("select_biomarkers matches reference t-test p-values")
{
    // reference p-values from an independent pooled-variance two-sample t-test implementation
    std::string text = "id,dx,age,x,y,z\n";
    const double cn_x[] = {1, 2, 3}, ad_x[] = {4, 5, 6};
    const double cn_y[] = {0.1, 0.4, 0.2, 0.35, 0.3}, ad_y[] = {0.5, 0.45, 0.7, 0.62};
    int id = 0;
    for (int i = 0; i < 5; ++i)
        text += std::to_string(id++) + ",CN,0," + (i < 3 ? std::to_string(cn_x[i]) : "") + "," + std::to_string(cn_y[i]) + ",1\n";
    for (int i = 0; i < 4; ++i)
        text += std::to_string(id++) + ",AD,0," + (i < 3 ? std::to_string(ad_x[i]) : "") + "," + std::to_string(ad_y[i]) + ",1\n";
    text += "99,MCI,0,100,100,1\n";
    const Dataset ds = parse(text, basic_schema());
    const Selection sel = select_biomarkers(ds, 0.05, false);
    REQUIRE(sel.tests.size() == 2);
    CHECK(sel.tests[0].name == "x");
    CHECK(sel.tests[0].p_value == doctest::Approx(0.021311641128756727).epsilon(1e-9));
    CHECK(sel.tests[1].p_value == doctest::Approx(0.00694882284173145).epsilon(1e-9));
    CHECK(sel.tests[0].t_statistic > 0);
    CHECK(sel.selected == std::vector<std::string>{"y", "x"});
    REQUIRE(sel.warnings.size() == 1);
    CHECK(sel.warnings[0].find("z") == 0);
    // Bonferroni over three biomarkers: 0.05 / 3 keeps only y
    CHECK(select_biomarkers(ds, 0.05, true).selected == std::vector<std::string>{"y"});
}

TEST_CASE("select_biomarkers on seeded samples")
{
    std::mt19937_64 rng(123);
    std::normal_distribution<double> z(0.0, 1.0);
    Dataset ds;
    ds.biomarker_names = {"noise", "signal"};
    ds.biomarkers.resize(200, 2);
    for (int j = 0; j < 200; ++j) {
        const bool ad = j >= 100;
        ds.subject_ids.push_back(std::to_string(j));
        ds.diagnoses.push_back(ad ? Diagnosis::AD : Diagnosis::CN);
        ds.biomarkers(j, 0) = z(rng);
        ds.biomarkers(j, 1) = z(rng) + (ad ? 3.0 : 0.0);
    }
    ds.unadjusted = BoolMatrix::Constant(200, 2, false);
    const Selection s = select_biomarkers(ds, 0.01, true);
    CHECK(s.selected == std::vector<std::string>{"signal"});
    CHECK(s.tests[0].p_value > 0.005);
    CHECK(s.tests[1].p_value < 1e-30);
}
