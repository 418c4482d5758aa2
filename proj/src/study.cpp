#include "acds/study.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "acds/seed.hpp"

namespace acds::cli {

namespace fs = std::filesystem;
using activelearn::Criterion;

namespace {

constexpr int kSchemaVersion = 1;

const char* kRunsHeader = "study,sigma2,criterion,replication,seed,gamma,l2_beta,n_total,converged,iterations,status";
const char* kSummaryHeader = "sigma2,criterion,runs,gamma_mean,gamma_std,l2_beta_mean,l2_beta_std,n_mean,n_std";

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(","));
    std::vector<std::string> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (!p.empty()) {
            out.push_back(p);
        }
    }
    return out;
}

double parse_double(const std::string& s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

template <class Int>
Int parse_int(const std::string& s)
{
    Int v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument("not an integer: '" + s + "'");
    }
    return v;
}

bool parse_bool(std::string s)
{
    boost::to_lower(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::uint64_t criterion_code(Criterion c) { return static_cast<std::uint64_t>(c) + 1; }

std::string mean_std_key(double sigma2, const std::string& crit) { return format_double(sigma2) + "|" + crit; }

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void StudyConfig::validate() const
{
    if (replications < 1) {
        throw std::invalid_argument("replications must be >= 1");
    }
    if (sigma2.empty() || criteria.empty()) {
        throw std::invalid_argument("need at least one sigma2 and one criterion");
    }
    for (double s : sigma2) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("sigma2 values must be finite and >= 0");
        }
    }
    if (parallel < 1) {
        throw std::invalid_argument("parallel must be >= 1");
    }
    run.validate();
}

StudyConfig default_config(sim::StudyKind kind)
{
    const sim::Study s = sim::make_study(kind, 0);
    StudyConfig c;
    c.study = kind;
    c.sigma2 = s.default_sigma2;
    c.criteria = {Criterion::ACDS, Criterion::MAXIMIN_ONLY};
    c.run = s.defaults;
    return c;
}

StudyConfig load_config(const std::string& path)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    const auto name = tree.get_optional<std::string>("study.name");
    if (!name) {
        throw std::invalid_argument("config: missing [study] name");
    }
    StudyConfig c = default_config(sim::parse_study(*name));
    if (auto v = tree.get_optional<std::string>("study.sigma2")) {
        c.sigma2.clear();
        for (const auto& p : split_list(*v)) {
            c.sigma2.push_back(parse_double(p));
        }
    }
    if (auto v = tree.get_optional<std::string>("study.criteria")) {
        c.criteria.clear();
        for (const auto& p : split_list(*v)) {
            c.criteria.push_back(activelearn::parse_criterion(p));
        }
    }
    if (auto v = tree.get_optional<std::string>("study.replications")) {
        c.replications = parse_int<int>(*v);
    }
    if (auto v = tree.get_optional<std::string>("study.seed")) {
        c.master_seed = parse_int<std::uint64_t>(*v);
    }
    if (auto v = tree.get_optional<std::string>("study.output")) {
        c.output_dir = *v;
    }
    if (auto v = tree.get_optional<std::string>("study.parallel")) {
        c.parallel = parse_int<int>(*v);
    }
    if (auto v = tree.get_optional<std::string>("study.write_json")) {
        c.write_json = parse_bool(*v);
    }
    auto& r = c.run;
    if (auto v = tree.get_optional<std::string>("run.tol")) {
        r.tol = parse_double(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.n_max")) {
        r.n_max = parse_int<Index>(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.batch_size")) {
        r.batch_size = parse_int<Index>(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.n_init")) {
        r.n_init = parse_int<Index>(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.fixed_n")) {
        if (boost::trim_copy(*v).empty() || boost::iequals(*v, "none")) {
            r.fixed_n.reset();
        } else {
            r.fixed_n = parse_int<Index>(*v);
        }
    }
    if (auto v = tree.get_optional<std::string>("run.initial_design")) {
        if (boost::iequals(*v, "random")) {
            r.initial_design = activelearn::InitialDesign::Random;
        } else if (boost::iequals(*v, "stratified") || boost::iequals(*v, "lhs")) {
            r.initial_design = activelearn::InitialDesign::Stratified;
        } else {
            throw std::invalid_argument("config: initial_design must be random or stratified");
        }
    }
    if (auto v = tree.get_optional<std::string>("run.strict_budget")) {
        r.strict_budget = parse_bool(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.normalize_weights")) {
        r.normalize_weights = parse_bool(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.gp_starts")) {
        r.gp_starts = parse_int<int>(*v);
    }
    if (auto v = tree.get_optional<std::string>("run.gp_starts_warm")) {
        r.gp_starts_warm = parse_int<int>(*v);
    }
    c.validate();
    return c;
}

std::uint64_t run_seed(std::uint64_t master, sim::StudyKind study, std::size_t sigma2_index, Criterion criterion,
                       int replication)
{
    return derive_seed(master, {hash_name(sim::to_string(study)), static_cast<std::uint64_t>(sigma2_index),
                                criterion_code(criterion), static_cast<std::uint64_t>(replication)});
}

std::uint64_t problem_seed(std::uint64_t master, sim::StudyKind study, std::size_t sigma2_index, int replication)
{
    return derive_seed(master, {hash_name(sim::to_string(study)), static_cast<std::uint64_t>(sigma2_index), 0,
                                static_cast<std::uint64_t>(replication)});
}

int StudyResult::exit_code() const
{
    return static_cast<double>(aborted) > 0.1 * static_cast<double>(rows.size()) ? 2 : 0;
}

nlohmann::json record_to_json(const activelearn::RunRecord& rec, const basis::BasisLibrary& lib, const RunRow& row,
                              const activelearn::RunConfig& cfg)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["study"] = row.study;
    j["sigma2"] = row.sigma2;
    j["criterion"] = row.criterion;
    j["replication"] = row.replication;
    j["seed"] = row.seed;
    j["status"] = row.status;
    j["config"] = {{"tol", cfg.tol},
                   {"n_max", cfg.n_max},
                   {"batch_size", cfg.batch_size},
                   {"n_init", cfg.n_init},
                   {"fixed_n", cfg.fixed_n ? json(*cfg.fixed_n) : json(nullptr)},
                   {"strict_budget", cfg.strict_budget}};
    j["convergence_reason"] = activelearn::to_string(rec.reason);
    j["aborted"] = rec.aborted;
    if (rec.aborted) {
        j["abort_message"] = rec.abort_message;
    }
    j["metrics"] = {{"gamma", rec.metrics.gamma},
                    {"false_positives", rec.metrics.false_positives},
                    {"false_negatives", rec.metrics.false_negatives},
                    {"l2_beta", rec.metrics.l2_beta},
                    {"n_total", rec.metrics.n_total}};
    json eqs = json::array();
    for (const auto& eq : rec.estimate) {
        json terms = json::object();
        for (Index t : eq.selected_indices) {
            terms[lib.term(t).display_name] = eq.coefficients[t];
        }
        eqs.push_back({{"terms", terms}, {"sigma2_hat", eq.sigma2_hat}});
    }
    j["estimate"] = eqs;
    json iters = json::array();
    for (const auto& it : rec.iterations) {
        json batch = json::array();
        for (const auto& p : it.batch) {
            batch.push_back(std::vector<double>(p.coords().data(), p.coords().data() + p.dim()));
        }
        iters.push_back({{"n", it.n},
                         {"alpha1", it.alpha1},
                         {"alpha2", it.alpha2},
                         {"rho", it.rho},
                         {"sigma2_hat", it.sigma2_hat},
                         {"tau2_cv", it.tau2_cv},
                         {"weights_degenerate", it.weights_degenerate},
                         {"beta", std::vector<double>(it.beta.data(), it.beta.data() + it.beta.size())},
                         {"batch", batch}});
    }
    j["iterations"] = iters;
    return j;
}

StudyResult execute_study(const StudyConfig& config, std::ostream* log)
{
    config.validate();
    struct Task {
        std::size_t sigma_index;
        Criterion criterion;
        int replication;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < config.sigma2.size(); ++s) {
        for (Criterion c : config.criteria) {
            for (int r = 0; r < config.replications; ++r) {
                tasks.push_back({s, c, r});
            }
        }
    }

    const bool random_problem =
        config.study == sim::StudyKind::ODE_RANDOM || config.study == sim::StudyKind::BASS;
    const sim::Study shared = sim::make_study(config.study, 0);

    StudyResult result;
    result.rows.resize(tasks.size());
    result.records.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            const Task& task = tasks[t];
            RunRow row;
            row.study = sim::to_string(config.study);
            row.sigma2 = config.sigma2[task.sigma_index];
            row.criterion = activelearn::to_string(task.criterion);
            row.replication = task.replication;
            row.seed = run_seed(config.master_seed, config.study, task.sigma_index, task.criterion, task.replication);

            std::optional<sim::Study> local;
            if (random_problem) {
                local.emplace(sim::make_study(
                    config.study, problem_seed(config.master_seed, config.study, task.sigma_index, task.replication)));
            }
            const sim::Study& st = local ? *local : shared;

            activelearn::RunConfig rc = config.run;
            rc.seed = row.seed;
            rc.criterion = task.criterion;
            activelearn::RunRecord rec;
            try {
                sim::TabulatedOracle oracle(st.table, row.sigma2, st.noise_target, derive_seed(row.seed, {3}));
                rec = activelearn::run(rc, oracle, st.library, st.pool, st.truth);
            } catch (const std::exception& e) {
                rec.aborted = true;
                rec.abort_message = e.what();
            }
            row.gamma = rec.metrics.gamma;
            row.l2_beta = rec.metrics.l2_beta;
            row.n_total = rec.n_total;
            row.converged = rec.converged();
            row.iterations = static_cast<Index>(rec.iterations.size());
            row.status = rec.aborted ? "aborted" : "ok";
            result.records[t] = record_to_json(rec, st.library, row, rc);
            result.rows[t] = row;
            if (log != nullptr) {
                std::lock_guard<std::mutex> lock(log_mutex);
                *log << row.study << " sigma2=" << format_double(row.sigma2) << " " << row.criterion << " rep "
                     << row.replication << ": gamma=" << row.gamma << " l2=" << format_double(row.l2_beta)
                     << " N=" << row.n_total << (rec.aborted ? " ABORTED: " + rec.abort_message : "") << "\n";
            }
        }
    };

    const int k = std::max(1, std::min<int>(config.parallel, static_cast<int>(tasks.size())));
    if (k == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < k; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& r : result.rows) {
        result.aborted += r.status == "ok" ? 0 : 1;
    }
    return result;
}

StudyResult run_study(const StudyConfig& config, std::ostream* log)
{
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    StudyResult result = execute_study(config, log);
    {
        std::ofstream os(dir / "runs.csv", std::ios::binary);
        write_runs_csv(os, result.rows);
    }
    {
        std::ofstream os(dir / "summary.csv", std::ios::binary);
        write_summary_csv(os, summarize(result.rows));
    }
    if (config.write_json) {
        fs::create_directories(dir / "runs", ec);
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            const auto& r = result.rows[i];
            std::ostringstream name;
            name << r.study << "_s" << format_double(r.sigma2) << "_" << r.criterion << "_r" << r.replication
                 << ".json";
            std::ofstream os(dir / "runs" / name.str(), std::ios::binary);
            os << result.records[i].dump(2) << "\n";
        }
    }
    return result;
}

std::vector<SummaryRow> summarize(const std::vector<RunRow>& rows)
{
    std::vector<SummaryRow> out;
    std::map<std::string, std::size_t> where;
    std::vector<std::vector<const RunRow*>> groups;
    for (const auto& r : rows) {
        const std::string key = mean_std_key(r.sigma2, r.criterion);
        auto it = where.find(key);
        if (it == where.end()) {
            it = where.emplace(key, out.size()).first;
            SummaryRow s;
            s.sigma2 = r.sigma2;
            s.criterion = r.criterion;
            out.push_back(s);
            groups.emplace_back();
        }
        if (r.status == "ok") {
            groups[it->second].push_back(&r);
        }
    }
    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = 0.0;
        sd = 0.0;
        if (v.empty()) {
            return;
        }
        for (double x : v) {
            mean += x;
        }
        mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) {
                ss += (x - mean) * (x - mean);
            }
            sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
    };
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> gam;
        std::vector<double> l2;
        std::vector<double> n;
        for (const RunRow* r : groups[g]) {
            gam.push_back(static_cast<double>(r->gamma));
            l2.push_back(r->l2_beta);
            n.push_back(static_cast<double>(r->n_total));
        }
        out[g].runs = static_cast<int>(groups[g].size());
        mean_std(gam, out[g].gamma_mean, out[g].gamma_std);
        mean_std(l2, out[g].l2_mean, out[g].l2_std);
        mean_std(n, out[g].n_mean, out[g].n_std);
    }
    return out;
}

void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows)
{
    os << kRunsHeader << "\n";
    for (const auto& r : rows) {
        os << r.study << ',' << format_double(r.sigma2) << ',' << r.criterion << ',' << r.replication << ','
           << r.seed << ',' << r.gamma << ',' << format_double(r.l2_beta) << ',' << r.n_total << ','
           << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << r.status << "\n";
    }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << kSummaryHeader << "\n";
    for (const auto& s : rows) {
        os << format_double(s.sigma2) << ',' << s.criterion << ',' << s.runs << ',' << format_double(s.gamma_mean)
           << ',' << format_double(s.gamma_std) << ',' << format_double(s.l2_mean) << ','
           << format_double(s.l2_std) << ',' << format_double(s.n_mean) << ',' << format_double(s.n_std) << "\n";
    }
}

namespace {

std::vector<std::vector<std::string>> read_csv(std::istream& is, const std::string& header)
{
    std::string line;
    if (!std::getline(is, line) || line != header) {
        throw std::runtime_error("unexpected CSV header");
    }
    std::vector<std::vector<std::string>> out;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        boost::split(cells, line, boost::is_any_of(","));
        out.push_back(std::move(cells));
    }
    return out;
}

} // namespace

std::vector<RunRow> read_runs_csv(std::istream& is)
{
    std::vector<RunRow> rows;
    for (const auto& c : read_csv(is, kRunsHeader)) {
        if (c.size() != 11) {
            throw std::runtime_error("runs.csv: wrong column count");
        }
        RunRow r;
        r.study = c[0];
        r.sigma2 = parse_double(c[1]);
        r.criterion = c[2];
        r.replication = parse_int<int>(c[3]);
        r.seed = parse_int<std::uint64_t>(c[4]);
        r.gamma = parse_int<std::int64_t>(c[5]);
        r.l2_beta = parse_double(c[6]);
        r.n_total = parse_int<Index>(c[7]);
        r.converged = c[8] == "1";
        r.iterations = parse_int<Index>(c[9]);
        r.status = c[10];
        rows.push_back(r);
    }
    return rows;
}

std::vector<SummaryRow> read_summary_csv(std::istream& is)
{
    std::vector<SummaryRow> rows;
    for (const auto& c : read_csv(is, kSummaryHeader)) {
        if (c.size() != 9) {
            throw std::runtime_error("summary.csv: wrong column count");
        }
        SummaryRow s;
        s.sigma2 = parse_double(c[0]);
        s.criterion = c[1];
        s.runs = parse_int<int>(c[2]);
        s.gamma_mean = parse_double(c[3]);
        s.gamma_std = parse_double(c[4]);
        s.l2_mean = parse_double(c[5]);
        s.l2_std = parse_double(c[6]);
        s.n_mean = parse_double(c[7]);
        s.n_std = parse_double(c[8]);
        rows.push_back(s);
    }
    return rows;
}

std::string verify_outputs(const std::string& dir)
{
    std::ifstream runs(fs::path(dir) / "runs.csv");
    std::ifstream summary(fs::path(dir) / "summary.csv");
    if (!runs || !summary) {
        return "missing runs.csv or summary.csv in " + dir;
    }
    const std::vector<SummaryRow> expect = summarize(read_runs_csv(runs));
    const std::vector<SummaryRow> got = read_summary_csv(summary);
    if (expect.size() != got.size()) {
        return "summary.csv has " + std::to_string(got.size()) + " rows, expected " + std::to_string(expect.size());
    }
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
    for (std::size_t i = 0; i < got.size(); ++i) {
        const auto& e = expect[i];
        const auto& g = got[i];
        if (e.criterion != g.criterion || !close(e.sigma2, g.sigma2) || e.runs != g.runs ||
            !close(e.gamma_mean, g.gamma_mean) || !close(e.gamma_std, g.gamma_std) || !close(e.l2_mean, g.l2_mean) ||
            !close(e.l2_std, g.l2_std) || !close(e.n_mean, g.n_mean) || !close(e.n_std, g.n_std)) {
            return "summary row " + std::to_string(i + 1) + " (" + g.criterion + ", sigma2=" + format_double(g.sigma2) +
                   ") does not match runs.csv";
        }
    }
    return {};
}

} // namespace acds::cli
