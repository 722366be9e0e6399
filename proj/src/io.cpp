#include "cocycle_lab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cocycle_lab {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_point(const SymbolicPoint& x) {
    std::string s = word_to_string(x.left_tail()) + "|" + word_to_string(x.core()) + "|" +
                    word_to_string(x.right_tail());
    if (x.core_start() != 0) s += "@" + std::to_string(x.core_start());
    return s;
}

SymbolicPoint parse_point(const std::string& text, int alphabet_size) {
    std::string body = text;
    long offset = 0;
    if (auto at = body.find('@'); at != std::string::npos) {
        offset = std::stol(body.substr(at + 1));
        body = body.substr(0, at);
    }
    auto first = body.find('|');
    auto second = body.find('|', first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw Error("point must have the form left|core|right: '" + text + "'");
    Word left = word_from_string(body.substr(0, first));
    Word core = word_from_string(body.substr(first + 1, second - first - 1));
    Word right = word_from_string(body.substr(second + 1));
    return SymbolicPoint(alphabet_size, left, core, right, offset);
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (long r = 0; r < m.rows(); ++r) {
        for (long c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << format_double(m(r, c).real()) << ' ' << format_double(m(r, c).imag());
        }
        out << '\n';
    }
}

Matrix read_matrix(std::istream& in, int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double re, im;
            if (!(in >> re >> im)) throw Error("matrix block truncated");
            m(r, c) = Complex(re, im);
        }
    return m;
}

namespace {

std::string transitions_line(const ShiftSystem& system) {
    if (system.full) return {};
    std::ostringstream out;
    out << "transitions";
    for (int i = 0; i < system.alphabet_size; ++i)
        for (int j = 0; j < system.alphabet_size; ++j) out << ' ' << system.transitions(i, j);
    return out.str();
}

ShiftSystem system_from_header(int alphabet, double theta, const std::vector<int>& transitions) {
    if (transitions.empty()) return ShiftSystem::full_shift(alphabet, theta);
    if (static_cast<int>(transitions.size()) != alphabet * alphabet)
        throw Error("transition matrix needs alphabet^2 entries");
    Eigen::Matrix<int, -1, -1> t(alphabet, alphabet);
    for (int i = 0; i < alphabet; ++i)
        for (int j = 0; j < alphabet; ++j) t(i, j) = transitions[i * alphabet + j];
    ShiftSystem s = ShiftSystem::subshift(t, theta);
    return s;
}

}  // namespace

void save_cocycle(const std::string& path, const Cocycle& a, const ShiftSystem& system) {
    if (!a.is_finite_window()) throw Error("only finite-window cocycles are serializable");
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "cocycle-table v1\n";
    out << "alphabet " << system.alphabet_size << '\n';
    out << "dimension " << a.dimension() << '\n';
    out << "field " << (a.field() == ScalarField::real ? "real" : "complex") << '\n';
    out << "window " << a.window_radius() << '\n';
    out << "theta " << format_double(system.theta) << '\n';
    out << "eta " << format_double(a.eta()) << '\n';
    if (std::string t = transitions_line(system); !t.empty()) out << t << '\n';
    out << "entries " << a.table().entries.size() << '\n';
    for (const auto& [w, m] : a.table().entries) {
        out << "entry " << word_to_string(w) << '\n';
        write_matrix(out, m);
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

std::pair<Cocycle, ShiftSystem> load_cocycle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != "cocycle-table v1") throw Error("'" + path + "' is not a cocycle table file");

    int alphabet = 0, dimension = 0, window = -1;
    double theta = 0.5, eta = 1.0;
    ScalarField field = ScalarField::complex;
    std::vector<int> transitions;
    long entry_count = -1;

    std::string key;
    while (in >> key) {
        if (key == "alphabet") in >> alphabet;
        else if (key == "dimension") in >> dimension;
        else if (key == "field") {
            std::string v;
            in >> v;
            if (v == "real") field = ScalarField::real;
            else if (v == "complex") field = ScalarField::complex;
            else throw Error("unknown field '" + v + "'");
        } else if (key == "window") in >> window;
        else if (key == "theta") in >> theta;
        else if (key == "eta") in >> eta;
        else if (key == "transitions") {
            transitions.resize(static_cast<std::size_t>(alphabet) * alphabet);
            for (auto& t : transitions) in >> t;
        } else if (key == "entries") {
            in >> entry_count;
            break;
        } else {
            throw Error("unexpected header key '" + key + "' in '" + path + "'");
        }
    }
    if (alphabet < 1 || dimension < 1 || window < 0 || entry_count < 0)
        throw Error("incomplete cocycle table header in '" + path + "'");

    WindowTable table;
    table.radius = window;
    for (long e = 0; e < entry_count; ++e) {
        std::string tag, word_text;
        if (!(in >> tag >> word_text) || tag != "entry")
            throw Error("expected 'entry <word>' record in '" + path + "'");
        table.entries[word_from_string(word_text)] = read_matrix(in, dimension, dimension);
    }
    ShiftSystem system = system_from_header(alphabet, theta, transitions);
    return {Cocycle::finite_window(dimension, field, std::move(table), eta), system};
}

void save_certificate(const std::string& path, const SimplicityCertificate& cert,
                      const ShiftSystem& system) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    const int d = static_cast<int>(cert.period_matrix.rows());
    out << "simplicity-certificate v1\n";
    out << "verdict " << to_string(cert.verdict) << '\n';
    out << "alphabet " << system.alphabet_size << '\n';
    out << "theta " << format_double(system.theta) << '\n';
    if (std::string t = transitions_line(system); !t.empty()) out << t << '\n';
    out << "p " << format_point(cert.p) << '\n';
    out << "q " << format_point(cert.q) << '\n';
    out << "m " << cert.m << '\n';
    out << "delta-pinch " << format_double(cert.delta_pinch) << '\n';
    out << "delta-twist " << format_double(cert.delta_twist) << '\n';
    out << "pinching-margin " << format_double(cert.pinching_margin) << '\n';
    out << "twisting-margin " << format_double(cert.twisting_margin) << '\n';
    out << "holonomy-error-budget " << format_double(cert.holonomy_error_budget) << '\n';
    out << "tau " << format_double(cert.bunching.tau) << '\n';
    out << "period-matrix " << d << '\n';
    write_matrix(out, cert.period_matrix);
    if (cert.psi.rows() == d) {
        out << "transition-matrix " << d << '\n';
        write_matrix(out, cert.psi);
    }
    if (cert.eigen_data.values.size() == d) {
        out << "eigenvalues " << d << '\n';
        for (int i = 0; i < d; ++i)
            out << format_double(cert.eigen_data.values(i).real()) << ' '
                << format_double(cert.eigen_data.values(i).imag()) << '\n';
    }
    out << "end\n";
    if (!out) throw Error("write failed for '" + path + "'");
}

int verify_certificate(const std::string& certificate_path, const std::string& cocycle_path,
                       std::ostream& diag, double tolerance) {
    std::optional<Cocycle> loaded_cocycle;
    ShiftSystem system = ShiftSystem::full_shift(2);
    std::string verdict_text, p_text, q_text;
    long m = 0;
    double recorded_pinching = 0.0, recorded_twisting = 0.0, recorded_tau = 0.0;
    double delta_pinch = kDefaultDeltaPinch, delta_twist = kDefaultDeltaTwist;
    double recorded_budget = 0.0;
    Matrix recorded_period, recorded_psi;

    try {
        auto loaded = load_cocycle(cocycle_path);
        loaded_cocycle.emplace(std::move(loaded.first));
        system = std::move(loaded.second);

        std::ifstream in(certificate_path);
        if (!in) throw Error("cannot open '" + certificate_path + "'");
        std::string line;
        std::getline(in, line);
        if (line != "simplicity-certificate v1")
            throw Error("'" + certificate_path + "' is not a certificate file");
        std::string key;
        int cert_alphabet = system.alphabet_size;
        while (in >> key) {
            if (key == "end") break;
            if (key == "verdict") in >> verdict_text;
            else if (key == "alphabet") in >> cert_alphabet;
            else if (key == "theta") { double t; in >> t; }
            else if (key == "transitions") {
                for (int i = 0; i < cert_alphabet * cert_alphabet; ++i) { int t; in >> t; }
            } else if (key == "p") in >> p_text;
            else if (key == "q") in >> q_text;
            else if (key == "m") in >> m;
            else if (key == "delta-pinch") in >> delta_pinch;
            else if (key == "delta-twist") in >> delta_twist;
            else if (key == "pinching-margin") in >> recorded_pinching;
            else if (key == "twisting-margin") in >> recorded_twisting;
            else if (key == "holonomy-error-budget") in >> recorded_budget;
            else if (key == "tau") in >> recorded_tau;
            else if (key == "period-matrix") {
                int d; in >> d;
                recorded_period = read_matrix(in, d, d);
            } else if (key == "transition-matrix") {
                int d; in >> d;
                recorded_psi = read_matrix(in, d, d);
            } else if (key == "eigenvalues") {
                int d; in >> d;
                read_matrix(in, d, 1);
            } else {
                throw Error("unexpected certificate key '" + key + "'");
            }
        }
        if (p_text.empty() || q_text.empty() || m <= 0)
            throw Error("certificate misses its witnesses");
    } catch (const Error& e) {
        diag << "parse error: " << e.what() << '\n';
        return 2;
    }

    const Cocycle& a = *loaded_cocycle;
    try {
        SymbolicPoint p = parse_point(p_text, system.alphabet_size);
        SymbolicPoint q = parse_point(q_text, system.alphabet_size);
        if (!p.is_periodic()) {
            diag << "precondition: p is not periodic\n";
            return 1;
        }
        if (!system.point_admissible(p) || !system.point_admissible(q)) {
            diag << "precondition: witness point not admissible for the system\n";
            return 1;
        }
        if (m % p.period() != 0 || !agree_on_left(p, q) ||
            !agree_on_right(q.shifted(m), p)) {
            diag << "precondition: (p, q, m) is not a homoclinic datum\n";
            return 1;
        }
        HomoclinicData h{p, q, m};

        BunchingCertificate bunching = certify_bunching(a, system);
        if (std::abs(bunching.tau - recorded_tau) > tolerance) {
            diag << "mismatch: tau recomputed " << format_double(bunching.tau) << " vs recorded "
                 << format_double(recorded_tau) << '\n';
            return 1;
        }
        Matrix period = a.product(p, p.period());
        if (recorded_period.rows() == period.rows() &&
            (period - recorded_period).norm() > tolerance * std::max(1.0, period.norm())) {
            diag << "mismatch: period matrix differs by "
                 << format_double((period - recorded_period).norm()) << '\n';
            return 1;
        }
        PinchingReport pin = check_pinching_matrix(period, delta_pinch,
                                                   a.field() == ScalarField::real);
        if (std::abs(pin.margin - recorded_pinching) > tolerance) {
            diag << "mismatch: pinching margin recomputed " << format_double(pin.margin)
                 << " vs recorded " << format_double(recorded_pinching) << '\n';
            return 1;
        }
        std::string verdict = "not-pinching";
        if (pin.pinching) {
            TransitionMap psi = transition_map(a, bunching, h, 1e-11);
            if (recorded_psi.rows() == psi.psi.rows() &&
                (psi.psi - recorded_psi).norm() >
                    tolerance * std::max(1.0, psi.psi.norm()) + recorded_budget) {
                diag << "mismatch: transition map differs by "
                     << format_double((psi.psi - recorded_psi).norm()) << '\n';
                return 1;
            }
            TwistingReport tw = check_twisting(pin.eigen, psi, delta_twist);
            if (std::abs(tw.margin - recorded_twisting) > tolerance + recorded_budget) {
                diag << "mismatch: twisting margin recomputed " << format_double(tw.margin)
                     << " vs recorded " << format_double(recorded_twisting) << '\n';
                return 1;
            }
            verdict = tw.twisting ? "simple" : "not-twisting";
        }
        if (verdict != verdict_text) {
            diag << "mismatch: verdict recomputed '" << verdict << "' vs recorded '"
                 << verdict_text << "'\n";
            return 1;
        }
    } catch (const Error& e) {
        diag << "verification error: " << e.what() << '\n';
        return 1;
    }
    diag << "certificate verified\n";
    return 0;
}

}  // namespace cocycle_lab
