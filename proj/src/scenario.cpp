#include "cocycle_lab/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace cocycle_lab {

namespace {

struct Line {
    long number;
    std::string text;
};

struct TaskSpec {
    long line;
    std::string name;
    std::map<std::string, std::string> args;
};

struct Scenario {
    std::optional<ShiftSystem> system;
    std::optional<Cocycle> cocycle;
    std::optional<MeasureSpec> measure;
    std::vector<TaskSpec> tasks;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& file, long line, const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    double v;
    while (in >> v) out.push_back(v);
    std::string leftover;
    if (in.clear(), in >> leftover)
        throw ParseError(file, line, "expected numbers, found '" + leftover + "'");
    return out;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");

    std::vector<Line> lines;
    std::string raw;
    long number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw = raw.substr(0, hash);
        raw = trim(raw);
        if (!raw.empty()) lines.push_back({number, raw});
    }

    Scenario sc;
    std::string section;
    std::map<std::string, std::pair<long, std::string>> system_kv, cocycle_kv, measure_kv;
    std::vector<std::pair<long, std::pair<Word, std::vector<double>>>> entries;
    std::vector<std::pair<long, std::vector<double>>> markov_rows;

    for (const auto& line : lines) {
        if (line.text.front() == '[') {
            if (line.text.back() != ']')
                throw ParseError(path, line.number, "unterminated section header");
            section = line.text.substr(1, line.text.size() - 2);
            if (section != "system" && section != "cocycle" && section != "measure" &&
                section != "tasks")
                throw ParseError(path, line.number, "unknown section '" + section + "'");
            continue;
        }
        if (section.empty())
            throw ParseError(path, line.number, "content before the first section header");

        if (section == "tasks") {
            std::istringstream ts(line.text);
            TaskSpec task;
            task.line = line.number;
            ts >> task.name;
            std::string kv;
            while (ts >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ParseError(path, line.number, "task argument '" + kv +
                                                            "' is not key=value");
                task.args[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            sc.tasks.push_back(std::move(task));
            continue;
        }

        auto eq = line.text.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, line.number, "expected 'key = value'");
        std::string key = trim(line.text.substr(0, eq));
        std::string value = trim(line.text.substr(eq + 1));
        if (section == "cocycle" && key.rfind("entry ", 0) == 0) {
            Word w = word_from_string(trim(key.substr(6)));
            entries.push_back({line.number, {w, parse_numbers(path, line.number, value)}});
        } else if (section == "measure" && key.rfind("row ", 0) == 0) {
            markov_rows.push_back({line.number, parse_numbers(path, line.number, value)});
        } else {
            auto& kv = section == "system" ? system_kv
                       : section == "cocycle" ? cocycle_kv
                                              : measure_kv;
            kv[key] = {line.number, value};
        }
    }

    // System section.
    {
        long at = 0;
        auto get = [&](const std::string& key, const std::string& fallback) {
            auto it = system_kv.find(key);
            if (it == system_kv.end()) return fallback;
            at = it->second.first;
            return it->second.second;
        };
        int alphabet = std::stoi(get("alphabet", "2"));
        double theta = std::stod(get("theta", "0.5"));
        std::string transitions = get("transitions", "");
        try {
            if (transitions.empty()) {
                sc.system = ShiftSystem::full_shift(alphabet, theta);
            } else {
                auto nums = parse_numbers(path, at, transitions);
                if (static_cast<int>(nums.size()) != alphabet * alphabet)
                    throw Error("transitions needs alphabet^2 entries");
                Eigen::Matrix<int, -1, -1> t(alphabet, alphabet);
                for (int i = 0; i < alphabet; ++i)
                    for (int j = 0; j < alphabet; ++j)
                        t(i, j) = nums[i * alphabet + j] != 0.0 ? 1 : 0;
                sc.system = ShiftSystem::subshift(t, theta);
            }
        } catch (const Error& e) {
            throw ParseError(path, at, e.what());
        }
    }

    // Cocycle section.
    if (!cocycle_kv.empty() || !entries.empty()) {
        auto get = [&](const std::string& key, const std::string& fallback) {
            auto it = cocycle_kv.find(key);
            return it == cocycle_kv.end() ? fallback : it->second.second;
        };
        if (std::string file = get("file", ""); !file.empty()) {
            std::filesystem::path base = std::filesystem::path(path).parent_path();
            auto [cocycle, system] = load_cocycle((base / file).string());
            sc.cocycle = std::move(cocycle);
            sc.system = std::move(system);
        } else {
            int dimension = std::stoi(get("dimension", "2"));
            int window = std::stoi(get("window", "0"));
            double eta = std::stod(get("eta", "1"));
            ScalarField field =
                get("field", "complex") == "real" ? ScalarField::real : ScalarField::complex;
            WindowTable table;
            table.radius = window;
            for (const auto& [line_no, entry] : entries) {
                const auto& [word, numbers] = entry;
                const std::size_t dd = static_cast<std::size_t>(dimension) * dimension;
                Matrix m(dimension, dimension);
                if (numbers.size() == dd) {
                    for (int r = 0; r < dimension; ++r)
                        for (int c = 0; c < dimension; ++c)
                            m(r, c) = numbers[r * dimension + c];
                } else if (numbers.size() == 2 * dd) {
                    for (int r = 0; r < dimension; ++r)
                        for (int c = 0; c < dimension; ++c)
                            m(r, c) = Complex(numbers[2 * (r * dimension + c)],
                                              numbers[2 * (r * dimension + c) + 1]);
                } else {
                    throw ParseError(path, line_no,
                                     "entry needs d^2 reals or 2 d^2 re/im numbers");
                }
                table.entries[word] = m;
            }
            try {
                sc.cocycle = Cocycle::finite_window(dimension, field, std::move(table), eta);
            } catch (const Error& e) {
                throw ParseError(path, entries.empty() ? 0 : entries.front().first, e.what());
            }
        }
    }

    // Measure section.
    if (!measure_kv.empty() || !markov_rows.empty()) {
        auto get = [&](const std::string& key, const std::string& fallback) {
            auto it = measure_kv.find(key);
            return it == measure_kv.end() ? fallback : it->second.second;
        };
        std::string kind = get("kind", "bernoulli");
        try {
            if (kind == "bernoulli") {
                auto probs = parse_numbers(path, 0, get("probs", ""));
                sc.measure = MeasureSpec::bernoulli(probs);
            } else if (kind == "markov") {
                const int k = static_cast<int>(markov_rows.size());
                RealMatrix q(k, k);
                for (int i = 0; i < k; ++i) {
                    if (static_cast<int>(markov_rows[i].second.size()) != k)
                        throw Error("markov row length mismatch");
                    for (int j = 0; j < k; ++j) q(i, j) = markov_rows[i].second[j];
                }
                sc.measure = MeasureSpec::markov(q);
            } else {
                throw Error("unknown measure kind '" + kind + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(path, markov_rows.empty() ? 0 : markov_rows.front().first, e.what());
        }
    }
    return sc;
}

// ---------------------------------------------------------------------------

class Report {
public:
    Report(ScenarioOptions::Format format) : format_(format) {}

    TaskOutcome& begin(const std::string& name) {
        tasks_.push_back(TaskOutcome{name, false, "", {}});
        return tasks_.back();
    }
    const std::vector<TaskOutcome>& tasks() const { return tasks_; }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open report file '" + path + "'");
        if (format_ == ScenarioOptions::Format::text) {
            for (std::size_t i = 0; i < tasks_.size(); ++i) {
                const auto& t = tasks_[i];
                out << "== task " << i + 1 << ": " << t.name << " ==\n";
                out << "status " << (t.pass ? "pass" : "fail") << '\n';
                if (!t.detail.empty()) out << "detail " << t.detail << '\n';
                for (const auto& [k, v] : t.fields) out << k << ' ' << v << '\n';
                out << '\n';
            }
            return;
        }
        nlohmann::json j = nlohmann::json::array();
        for (const auto& t : tasks_) {
            nlohmann::json jt;
            jt["task"] = t.name;
            jt["pass"] = t.pass;
            if (!t.detail.empty()) jt["detail"] = t.detail;
            for (const auto& [k, v] : t.fields) jt["fields"][k] = v;
            j.push_back(std::move(jt));
        }
        out << j.dump(2) << '\n';
    }

private:
    ScenarioOptions::Format format_;
    std::vector<TaskOutcome> tasks_;
};

std::string matrix_field(const Matrix& m) {
    std::ostringstream out;
    write_matrix(out, m);
    std::string s = out.str();
    for (auto& c : s)
        if (c == '\n') c = ';';
    return s;
}

std::string vector_field(const RealVector& v) {
    std::ostringstream out;
    for (long i = 0; i < v.size(); ++i) {
        if (i) out << ' ';
        out << format_double(v(i));
    }
    return out.str();
}

double arg_double(const TaskSpec& t, const std::string& key, double fallback) {
    auto it = t.args.find(key);
    return it == t.args.end() ? fallback : std::stod(it->second);
}

long arg_long(const TaskSpec& t, const std::string& key, long fallback) {
    auto it = t.args.find(key);
    return it == t.args.end() ? fallback : std::stol(it->second);
}

std::string arg_string(const TaskSpec& t, const std::string& key, const std::string& fallback) {
    auto it = t.args.find(key);
    return it == t.args.end() ? fallback : it->second;
}

struct TaskContext {
    const Scenario& scenario;
    const ScenarioOptions& options;
    std::string out_dir;
    std::string trace_path;

    const ShiftSystem& system() const {
        if (!scenario.system) throw Error("scenario has no [system] section");
        return *scenario.system;
    }
    const Cocycle& cocycle() const {
        if (!scenario.cocycle) throw Error("scenario has no [cocycle] section");
        return *scenario.cocycle;
    }
    const MeasureSpec& measure() const {
        if (!scenario.measure) throw Error("scenario has no [measure] section");
        return *scenario.measure;
    }
    HomoclinicData witness(const TaskSpec& t, const std::string& p_key,
                           const std::string& c_key) const {
        Word p_word = word_from_string(arg_string(t, p_key, "0"));
        Word connector = word_from_string(arg_string(t, c_key, "1"));
        return make_homoclinic(make_periodic(p_word, system()), connector, system());
    }
};

void run_certify_bunching(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    (void)t;
    BunchingCertificate cert = certify_bunching(ctx.cocycle(), ctx.system());
    out.fields.emplace_back("tau", format_double(cert.tau));
    out.fields.emplace_back("chain-constant", format_double(cert.chain_constant));
    out.fields.emplace_back("comparison-constant", format_double(cert.comparison_constant));
    out.fields.emplace_back("sup-norm", format_double(cert.sup_norm));
    out.fields.emplace_back("sup-inv-norm", format_double(cert.sup_inv_norm));
    out.fields.emplace_back("openness-margin", format_double(cert.openness_margin));
    out.fields.emplace_back("exhaustive", cert.exhaustive ? "yes" : "declared");
    out.pass = true;
    out.detail = "tau " + format_double(cert.tau);
}

void run_holonomy(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    const auto& system = ctx.system();
    SymbolicPoint x = parse_point(arg_string(t, "x", ""), system.alphabet_size);
    SymbolicPoint y = parse_point(arg_string(t, "y", ""), system.alphabet_size);
    double tol = arg_double(t, "tol", ctx.options.tol);
    std::string kind = arg_string(t, "kind", "stable");
    BunchingCertificate cert = certify_bunching(ctx.cocycle(), system);
    HolonomyResult h = kind == "stable" ? stable_holonomy(ctx.cocycle(), cert, x, y, tol)
                                        : unstable_holonomy(ctx.cocycle(), cert, x, y, tol);
    out.fields.emplace_back("value", matrix_field(h.value));
    out.fields.emplace_back("error-bound", format_double(h.error_bound));
    out.fields.emplace_back("terms-used", std::to_string(h.terms_used));
    out.fields.emplace_back("exact", h.exact ? "yes" : "no");
    out.pass = true;
    out.detail = kind + " holonomy, error bound " + format_double(h.error_bound);
}

void run_certify_simple(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    HomoclinicData h = ctx.witness(t, "p", "connector");
    bool real_mode = arg_string(t, "real", "0") == "1";
    SimplicityCertificate cert = certify_simple(
        ctx.cocycle(), ctx.system(), h, arg_double(t, "delta_pinch", kDefaultDeltaPinch),
        arg_double(t, "delta_twist", kDefaultDeltaTwist), ctx.options.tol, real_mode);
    std::string cert_path = ctx.out_dir + "/certificate.txt";
    save_certificate(cert_path, cert, ctx.system());
    out.fields.emplace_back("verdict", to_string(cert.verdict));
    out.fields.emplace_back("pinching-margin", format_double(cert.pinching_margin));
    out.fields.emplace_back("twisting-margin", format_double(cert.twisting_margin));
    out.fields.emplace_back("holonomy-error-budget",
                            format_double(cert.holonomy_error_budget));
    out.fields.emplace_back("certificate-file", cert_path);
    std::string expected = arg_string(t, "assert", "simple");
    out.pass = expected == "none" || to_string(cert.verdict) == expected;
    out.detail = "verdict " + to_string(cert.verdict);
}

void run_make_simple(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    double epsilon = arg_double(t, "epsilon", 0.05);
    MakeSimpleResult res =
        make_simple(ctx.cocycle(), ctx.system(), epsilon, kDefaultDeltaPinch, kDefaultDeltaTwist,
                    static_cast<std::uint64_t>(arg_long(t, "seed", ctx.options.seed)),
                    ctx.options.tol);
    std::string table_path = ctx.out_dir + "/perturbed_cocycle.txt";
    save_cocycle(table_path, res.cocycle, ctx.system());
    std::string cert_path = ctx.out_dir + "/perturbed_certificate.txt";
    save_certificate(cert_path, res.certificate, ctx.system());
    out.fields.emplace_back("plans", std::to_string(res.plans.size()));
    out.fields.emplace_back("total-change", format_double(res.total_change));
    out.fields.emplace_back("verdict", to_string(res.certificate.verdict));
    out.fields.emplace_back("cocycle-file", table_path);
    out.fields.emplace_back("certificate-file", cert_path);
    out.fields.emplace_back("seed", std::to_string(res.seed));
    out.pass = res.certificate.verdict == Verdict::simple && res.total_change <= epsilon;
    out.detail = "total change " + format_double(res.total_change);
}

void run_spectrum(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out,
                  std::string& trace_path) {
    long n_iter = arg_long(t, "n_iter", 100000);
    int n_samples = static_cast<int>(arg_long(t, "n_samples", 16));
    std::uint64_t seed = static_cast<std::uint64_t>(arg_long(t, "seed", ctx.options.seed));
    ConvergenceTrace trace;
    SpectrumEstimate est = estimate_spectrum(ctx.cocycle(), ctx.system(), ctx.measure(), n_iter,
                                             n_samples, seed, Execution::parallel, &trace);
    trace_path = ctx.out_dir + "/spectrum_trace.csv";
    std::ofstream csv(trace_path);
    csv << "iteration,exponent_index,running_estimate\n";
    for (long r = 0; r < trace.running.rows(); ++r)
        for (long c = 0; c < trace.running.cols(); ++c)
            csv << trace.iterations[r] << ',' << c << ',' << format_double(trace.running(r, c))
                << '\n';

    double delta_gap = arg_double(t, "delta_gap", 0.0);
    MultiplicityReport rep = multiplicity_report(est, delta_gap);
    out.fields.emplace_back("exponents", vector_field(est.exponents));
    out.fields.emplace_back("std-errors", vector_field(est.std_errors));
    out.fields.emplace_back("simple", rep.simple ? "yes" : "no");
    {
        std::ostringstream blocks;
        for (const auto& b : rep.blocks) {
            blocks << '{';
            for (std::size_t i = 0; i < b.size(); ++i) blocks << (i ? "," : "") << b[i];
            blocks << '}';
        }
        out.fields.emplace_back("multiplicity-blocks", blocks.str());
    }
    out.fields.emplace_back("seed", std::to_string(seed));
    out.fields.emplace_back("trace-file", trace_path);
    std::string expected = arg_string(t, "assert", "none");
    out.pass = expected == "none" || (expected == "simple") == rep.simple;
    out.detail = "exponents " + vector_field(est.exponents);
}

void run_induce(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    Word base = word_from_string(arg_string(t, "base", "0"));
    long horizon = arg_long(t, "R", 8);
    InducedSystem ind = induce(ctx.system(), base, horizon);
    out.fields.emplace_back("return-words", std::to_string(ind.words.size()));
    if (ctx.scenario.measure) {
        InducedMeasure im = induced_measure(ind, ctx.measure());
        out.fields.emplace_back("missing-mass", format_double(im.missing_mass));
        out.fields.emplace_back("expected-return", format_double(im.expected_return));
        out.fields.emplace_back("base-cylinder-mass", format_double(im.base_cylinder_mass));
    }
    std::size_t preview = std::min<std::size_t>(8, ind.words.size());
    for (std::size_t l = 0; l < preview; ++l)
        out.fields.emplace_back("word-" + std::to_string(l),
                                word_to_string(ind.words[l].symbols) + " r=" +
                                    std::to_string(ind.words[l].return_time));
    out.pass = !ind.words.empty();
    out.detail = std::to_string(ind.words.size()) + " return words up to R=" +
                 std::to_string(horizon);
}

void run_scaling_check(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    Word base = word_from_string(arg_string(t, "base", "0"));
    long horizon = arg_long(t, "R", 16);
    InducedSystem ind = induce(ctx.system(), base, horizon);
    ScalingParams params;
    params.n_iter = arg_long(t, "n_iter", 50000);
    params.n_samples = static_cast<int>(arg_long(t, "n_samples", 8));
    params.seed = static_cast<std::uint64_t>(arg_long(t, "seed", ctx.options.seed));
    ScalingReport rep = check_scaling(ctx.cocycle(), ctx.system(), ind, ctx.measure(), params);
    out.fields.emplace_back("target", format_double(rep.target));
    out.fields.emplace_back("missing-mass", format_double(rep.missing_mass));
    out.fields.emplace_back("kac-defect", format_double(rep.kac_defect));
    for (std::size_t i = 0; i < rep.ratios.size(); ++i) {
        if (rep.skipped[i]) {
            out.fields.emplace_back("ratio-" + std::to_string(i), "skipped");
        } else {
            out.fields.emplace_back("ratio-" + std::to_string(i),
                                    format_double(rep.ratios[i]) + " +/- " +
                                        format_double(rep.ratio_errors[i]));
        }
    }
    out.fields.emplace_back("multiplicity-agree", rep.multiplicity_agree ? "yes" : "no");
    if (!rep.notes.empty()) out.fields.emplace_back("notes", rep.notes);
    out.pass = rep.pass;
    out.detail = "target " + format_double(rep.target);
}

void run_rank_probe(const TaskContext& ctx, const TaskSpec& t, TaskOutcome& out) {
    std::vector<HomoclinicData> sites;
    sites.push_back(ctx.witness(t, "p", "connector"));
    if (t.args.count("p2") || t.args.count("connector2"))
        sites.push_back(ctx.witness(t, "p2", "connector2"));
    int directions = static_cast<int>(arg_long(t, "directions", 2 * 4 * sites.size()));
    double step = arg_double(t, "h", 1e-5);
    BunchingCertificate cert = certify_bunching(ctx.cocycle(), ctx.system());
    RankProbeReport rep = submersion_rank_probe(
        ctx.cocycle(), ctx.system(), cert, sites, directions, step,
        static_cast<std::uint64_t>(arg_long(t, "seed", ctx.options.seed)));
    out.fields.emplace_back("rank", std::to_string(rep.rank));
    out.fields.emplace_back("expected-rank", std::to_string(rep.expected_rank));
    out.fields.emplace_back("threshold", format_double(rep.threshold));
    out.fields.emplace_back("analytic-discrepancy",
                            format_double(rep.max_analytic_discrepancy));
    out.fields.emplace_back("singular-values", vector_field(rep.singular_values));
    if (rep.full_rank_asserted) {
        out.pass = rep.full_rank && rep.max_analytic_discrepancy < 1e-4;
        out.detail = "rank " + std::to_string(rep.rank) + " of " +
                     std::to_string(rep.expected_rank);
    } else {
        out.pass = true;
        out.detail = "rank >= " + std::to_string(rep.rank) + " (insufficient directions)";
    }
}

}  // namespace

ScenarioResult run_scenario(const std::string& path, const ScenarioOptions& options) {
    Scenario scenario = parse_scenario(path);
    std::filesystem::create_directories(options.out_dir);

    Report report(options.format);
    TaskContext ctx{scenario, options, options.out_dir, ""};

    for (const auto& task : scenario.tasks) {
        TaskOutcome& out = report.begin(task.name);
        try {
            if (task.name == "certify-bunching") run_certify_bunching(ctx, task, out);
            else if (task.name == "holonomy") run_holonomy(ctx, task, out);
            else if (task.name == "certify-simple") run_certify_simple(ctx, task, out);
            else if (task.name == "make-simple") run_make_simple(ctx, task, out);
            else if (task.name == "spectrum") run_spectrum(ctx, task, out, ctx.trace_path);
            else if (task.name == "induce") run_induce(ctx, task, out);
            else if (task.name == "scaling-check") run_scaling_check(ctx, task, out);
            else if (task.name == "rank-probe") run_rank_probe(ctx, task, out);
            else
                throw ParseError(path, task.line, "unknown task '" + task.name + "'");
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            out.pass = false;
            out.detail = e.what();
        }
    }

    ScenarioResult result;
    result.tasks = report.tasks();
    result.trace_path = ctx.trace_path;
    result.report_path = options.out_dir + (options.format == ScenarioOptions::Format::text
                                                ? "/report.txt"
                                                : "/report.json");
    report.write(result.report_path);
    result.exit_code = 0;
    for (const auto& t : result.tasks)
        if (!t.pass) result.exit_code = 1;
    return result;
}

}  // namespace cocycle_lab
