#include "lbsurv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lbsurv {

using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double(const std::string& s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad numeric cell: '" + s + "'");
    return x;
}

int parse_int(const std::string& s) {
    int x = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad integer cell: '" + s + "'");
    return x;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expect,
                    const std::string& path) {
    if (table.header != expect) {
        std::string want;
        for (const auto& h : expect) want += (want.empty() ? "" : ",") + h;
        throw std::runtime_error(path + ": expected header " + want);
    }
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header && !line.empty() && line[0] == '#') {
            table.comments.push_back(line);
            continue;
        }
        if (line.empty()) continue;
        if (!have_header) {
            table.header = split_commas(line);
            have_header = true;
        } else {
            table.rows.push_back(split_commas(line));
        }
    }
    if (!have_header) throw std::runtime_error(path + ": missing header row");
    return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& c : table.comments) out << c << '\n';
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void write_cohort_csv(const std::string& path, const std::vector<CohortRecord>& cohort,
                      const std::vector<std::string>& comments) {
    CsvTable table;
    table.comments = comments;
    table.header = {"a", "v", "delta"};
    for (const auto& rec : cohort)
        table.rows.push_back({format_double(rec.a), format_double(rec.v), std::to_string(rec.delta)});
    write_csv(path, table);
}

std::vector<CohortRecord> read_cohort_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    require_header(table, {"a", "v", "delta"}, path);
    std::vector<CohortRecord> cohort;
    cohort.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (row.size() != 3) throw std::runtime_error(path + ": expected 3 cells per row");
        cohort.push_back({parse_double(row[0]), parse_double(row[1]), parse_int(row[2])});
    }
    return cohort;
}

void write_sim_csv(const std::string& path, const std::vector<SimRecord>& cohort,
                   const std::vector<std::string>& comments) {
    CsvTable table;
    table.comments = comments;
    table.header = {"a", "r", "c", "v", "delta"};
    for (const auto& rec : cohort)
        table.rows.push_back({format_double(rec.a), format_double(rec.r), format_double(rec.c),
                              format_double(rec.v), std::to_string(rec.delta)});
    write_csv(path, table);
}

void write_mass_csv(const std::string& path, const MassFunction& g,
                    const std::vector<std::string>& comments) {
    CsvTable table;
    table.comments = comments;
    table.header = {"t", "mass"};
    for (std::size_t j = 0; j < g.size(); ++j)
        table.rows.push_back({format_double(g.support()[j]), format_double(g.masses()[j])});
    write_csv(path, table);
}

MassFunction read_mass_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    require_header(table, {"t", "mass"}, path);
    std::vector<double> t, w;
    for (const auto& row : table.rows) {
        if (row.size() != 2) throw std::runtime_error(path + ": expected 2 cells per row");
        t.push_back(parse_double(row[0]));
        w.push_back(parse_double(row[1]));
    }
    return MassFunction(std::move(t), std::move(w));
}

void write_fit_csv(const std::string& path, const FitResult& fit,
                   const std::vector<std::string>& comments) {
    CsvTable table;
    table.comments = comments;
    table.header = {"t", "mass_G", "G", "S_U"};
    StepFunction su = unbiased_survival(fit.ghat);
    double cum = 0.0;
    for (std::size_t j = 0; j < fit.ghat.size(); ++j) {
        cum += fit.ghat.masses()[j];
        table.rows.push_back({format_double(fit.ghat.support()[j]),
                              format_double(fit.ghat.masses()[j]), format_double(cum),
                              format_double(su.values()[j])});
    }
    write_csv(path, table);
}

MassFunction read_fit_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    require_header(table, {"t", "mass_G", "G", "S_U"}, path);
    std::vector<double> t, w;
    for (const auto& row : table.rows) {
        if (row.size() != 4) throw std::runtime_error(path + ": expected 4 cells per row");
        t.push_back(parse_double(row[0]));
        w.push_back(parse_double(row[1]));
    }
    return MassFunction(std::move(t), std::move(w));
}

void write_band_csv(const std::string& path, const BandResult& band,
                    const std::vector<std::string>& comments) {
    CsvTable table;
    table.comments = comments;
    table.header = {"t", "G", "se", "lo_G", "hi_G", "S_U", "lo_S", "hi_S"};
    for (std::size_t i = 0; i < band.grid.size(); ++i)
        table.rows.push_back({format_double(band.grid[i]), format_double(band.G[i]),
                              format_double(band.se[i]), format_double(band.lo_G[i]),
                              format_double(band.hi_G[i]), format_double(band.S_U[i]),
                              format_double(band.lo_S[i]), format_double(band.hi_S[i])});
    write_csv(path, table);
}

namespace {

std::vector<double> params_from(const json& j) {
    std::vector<double> p;
    for (const auto& v : j.at("params")) p.push_back(v.get<double>());
    return p;
}

LifetimeModel lifetime_from(const json& j) {
    std::string fam = j.at("family").get<std::string>();
    std::vector<double> p = params_from(j);
    if (fam == "exponential") return LifetimeModel(LifetimeFamily::Exponential, p);
    if (fam == "weibull") return LifetimeModel(LifetimeFamily::Weibull, p);
    if (fam == "gamma") return LifetimeModel(LifetimeFamily::Gamma, p);
    throw std::runtime_error("unknown lifetime family: " + fam);
}

CensoringModel censoring_from(const json& j) {
    std::string fam = j.at("family").get<std::string>();
    std::vector<double> p = j.contains("params") ? params_from(j) : std::vector<double>{};
    if (fam == "none") return CensoringModel(CensoringFamily::None, p);
    if (fam == "exponential") return CensoringModel(CensoringFamily::Exponential, p);
    if (fam == "uniform") return CensoringModel(CensoringFamily::Uniform, p);
    if (fam == "zero_atom") return CensoringModel(CensoringFamily::ZeroAtom, p);
    if (fam == "multiplicative") return CensoringModel(CensoringFamily::Multiplicative, p);
    throw std::runtime_error("unknown censoring family: " + fam);
}

json model_json(const std::string& family, const std::vector<double>& params) {
    return json{{"family", family}, {"params", params}};
}

Scheme scheme_from(const std::string& s) {
    if (s == "i") return Scheme::I;
    if (s == "ii") return Scheme::II;
    if (s == "iii") return Scheme::III;
    throw std::runtime_error("unknown scheme: '" + s + "' (want i, ii or iii)");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::I: return "i";
        case Scheme::II: return "ii";
        case Scheme::III: return "iii";
    }
    return "";
}

Scenario scenario_from(const json& j) {
    Scenario sc{lifetime_from(j.at("lifetime")), censoring_from(j.at("censoring")), 0,
                Scheme::I, 0, -1, -1};
    sc.k = j.at("k").get<int>();
    if (j.contains("scheme")) sc.scheme = scheme_from(j.at("scheme").get<std::string>());
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("m")) sc.m = j.at("m").get<int>();
    if (j.contains("n")) sc.n = j.at("n").get<int>();
    return sc;
}

} // namespace

std::string lifetime_to_json(const LifetimeModel& model) {
    return model_json(model.family_name(), model.params()).dump();
}

std::string censoring_to_json(const CensoringModel& model) {
    return model_json(model.family_name(), model.params()).dump();
}

LifetimeModel lifetime_from_json_text(const std::string& text) {
    return lifetime_from(json::parse(text));
}

CensoringModel censoring_from_json_text(const std::string& text) {
    return censoring_from(json::parse(text));
}

CensoringModel read_censoring_file(const std::string& path) {
    return censoring_from_json_text(read_text_file(path));
}

Scenario scenario_from_json_text(const std::string& text) {
    return scenario_from(json::parse(text));
}

Scenario read_scenario_file(const std::string& path) {
    return scenario_from_json_text(read_text_file(path));
}

std::string scenario_to_json(const Scenario& scenario) {
    json j{{"lifetime", model_json(scenario.lifetime.family_name(), scenario.lifetime.params())},
           {"censoring", model_json(scenario.censoring.family_name(), scenario.censoring.params())},
           {"k", scenario.k},
           {"scheme", scheme_name(scenario.scheme)},
           {"seed", scenario.seed}};
    if (scenario.m >= 0) j["m"] = scenario.m;
    if (scenario.n >= 0) j["n"] = scenario.n;
    return j.dump(2);
}

std::string metric_name(StudyMetric metric) {
    switch (metric) {
        case StudyMetric::SupError: return "sup-error";
        case StudyMetric::Coverage: return "coverage";
        case StudyMetric::MedianRatio: return "median-ratio";
    }
    return "";
}

void StudySpec::validate() const {
    if (replicates < 1) throw std::runtime_error("study: replicates >= 1 required");
    if (scenarios.empty()) throw std::runtime_error("study: at least one scenario required");
    if (k_values.empty()) throw std::runtime_error("study: at least one k required");
    if (metrics.empty()) throw std::runtime_error("study: at least one metric required");
    for (const auto& s : scenarios) {
        Scenario sc = s.scenario;
        for (int k : k_values) {
            sc.k = k;
            if (sc.scheme != Scheme::I) {
                // keep the censored fraction of the template scenario
                sc.n = static_cast<int>(std::lround(static_cast<double>(s.scenario.n) /
                                                    s.scenario.k * k));
                sc.m = k - sc.n;
            }
            sc.validate();
        }
    }
}

StudySpec read_study_file(const std::string& path) {
    json j = json::parse(read_text_file(path));
    StudySpec spec;
    int index = 0;
    for (const auto& sj : j.at("scenarios")) {
        std::string name = sj.contains("name") ? sj.at("name").get<std::string>()
                                                : "s" + std::to_string(index);
        spec.scenarios.push_back({std::move(name), scenario_from(sj)});
        ++index;
    }
    for (const auto& kv : j.at("k")) spec.k_values.push_back(kv.get<int>());
    spec.replicates = j.at("replicates").get<int>();
    if (j.contains("out_dir")) spec.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& mv : j.at("metrics")) {
        std::string m = mv.get<std::string>();
        if (m == "sup-error") spec.metrics.push_back(StudyMetric::SupError);
        else if (m == "coverage") spec.metrics.push_back(StudyMetric::Coverage);
        else if (m == "median-ratio") spec.metrics.push_back(StudyMetric::MedianRatio);
        else throw std::runtime_error("unknown study metric: " + m);
    }
    spec.validate();
    return spec;
}

} // namespace lbsurv
