// SPDX-License-Identifier: Apache-2.0
#include "fasris/experiment.hpp"

#include "fasris/presets.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fasris {

using nlohmann::json;
namespace fs = std::filesystem;

// --- matrix files -------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'F', 'A', 'S', 'R', 'I', 'S', 'M', '1'};

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& s, const std::string& where)
{
    double v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw ConstraintError(where + ": cannot parse number '" + s + "'");
    return v;
}

CMat read_matrix_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConstraintError("cannot open matrix file " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConstraintError(path + ": empty file");
    auto head = split_csv(line);
    if (head.size() < 3 || head[0] != "shape") throw ConstraintError(path + ": first line must be shape,<rows>,<cols>");
    const long rows = std::lround(parse_double(head[1], path)), cols = std::lround(parse_double(head[2], path));
    const bool cplx = head.size() < 4 || head[3] != "real";
    if (rows < 1 || cols < 1) throw ConstraintError(path + ": bad shape");
    CMat A(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw ConstraintError(path + ": expected " + std::to_string(rows) + " rows");
        auto cells = split_csv(line);
        const std::size_t want = std::size_t(cplx ? 2 * cols : cols);
        if (cells.size() != want)
            throw ConstraintError(path + ": row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                                  " values, expected " + std::to_string(want));
        for (long c = 0; c < cols; ++c)
            A(r, c) = cplx ? cd(parse_double(cells[2 * c], path), parse_double(cells[2 * c + 1], path))
                           : cd(parse_double(cells[c], path), 0.0);
    }
    return A;
}

CMat read_matrix_bin(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConstraintError("cannot open matrix file " + path);
    char magic[8];
    std::int64_t rows = 0, cols = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ConstraintError(path + ": not a FASRISM1 matrix file");
    if (rows < 1 || cols < 1 || rows > (1 << 16) || cols > (1 << 16)) throw ConstraintError(path + ": bad shape");
    Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A(rows, cols);
    in.read(reinterpret_cast<char*>(A.data()), std::streamsize(sizeof(cd) * rows * cols));
    if (!in) throw ConstraintError(path + ": truncated data");
    return A;
}

}  // namespace

CMat read_matrix(const std::string& path)
{
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".bin") return read_matrix_bin(path);
    return read_matrix_csv(path);
}

void write_matrix_csv(const std::string& path, const CMat& A)
{
    std::ofstream out(path);
    if (!out) throw ConstraintError("cannot write " + path);
    out << "shape," << A.rows() << ',' << A.cols() << ",complex\n";
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        for (Eigen::Index c = 0; c < A.cols(); ++c)
            out << (c ? "," : "") << format_number(A(r, c).real()) << ',' << format_number(A(r, c).imag());
        out << '\n';
    }
}

void write_matrix_bin(const std::string& path, const CMat& A)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConstraintError("cannot write " + path);
    const std::int64_t rows = A.rows(), cols = A.cols();
    Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> B = A;
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(B.data()), std::streamsize(sizeof(cd) * rows * cols));
}

// --- scenarios ----------------------------------------------------------------------

namespace {

const std::vector<std::string>& preset_params(const std::string& name)
{
    static const std::vector<std::string> unc{"M", "K", "L", "snr_db"};
    static const std::vector<std::string> planar{"M", "K", "snr_db", "W"};
    static const std::vector<std::string> iid{"M", "K", "L", "u", "t", "snr_db"};
    if (name == "uncommon_linear") return unc;
    if (name == "common_planar" || name == "common_planar_homogeneous") return planar;
    if (name == "iid") return iid;
    throw ConstraintError("unknown preset '" + name + "'");
}

double num(const json& j, const std::string& key, double def)
{
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) throw ConstraintError("'" + key + "' must be a number");
    return j[key].get<double>();
}

int integer(const json& j, const std::string& key, int def)
{
    const double v = num(j, key, def);
    if (v != std::floor(v)) throw ConstraintError("'" + key + "' must be an integer");
    return int(v);
}

std::string resolve(const std::string& base, const std::string& p)
{
    fs::path q(p);
    return q.is_absolute() ? p : (fs::path(base) / q).string();
}

CMat matrix_from_json(const json& j, const std::string& base, const std::string& what)
{
    if (!j.is_object() || !j.contains("type")) throw ConstraintError(what + ": matrix entry needs a \"type\"");
    const std::string type = j["type"].get<std::string>();
    if (type == "identity") return CMat::Identity(integer(j, "n", 1), integer(j, "n", 1));
    if (type == "ris")
        return ris_correlation_matrix({num(j, "d_c", 0.5), num(j, "alpha", 0.0), num(j, "beta", 1.0),
                                       integer(j, "n", 1)});
    if (type == "fas")
        return fas_correlation_matrix({num(j, "W_x", num(j, "W", 1.0)), num(j, "W_y", num(j, "W", 1.0)),
                                       integer(j, "N_x", 1), integer(j, "N_y", 1)});
    if (type == "file") {
        if (!j.contains("path")) throw ConstraintError(what + ": file entry needs a \"path\"");
        return read_matrix(resolve(base, j["path"].get<std::string>()));
    }
    throw ConstraintError(what + ": unknown matrix type '" + type + "'");
}

std::vector<CMat> matrix_list(const json& j, const std::string& base, const std::string& what)
{
    std::vector<CMat> out;
    if (j.is_array())
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], base, what));
    else
        out.push_back(matrix_from_json(j, base, what));
    return out;
}

// scalar, list, or "<key>_db" variant
RVec gains(const json& j, const std::string& key, int K, std::optional<double> def = std::nullopt)
{
    auto expand = [&](const json& v, bool db) {
        RVec g(K);
        if (v.is_number()) {
            g.setConstant(v.get<double>());
        } else if (v.is_array()) {
            if (int(v.size()) != K) throw ConstraintError("'" + key + "' needs " + std::to_string(K) + " entries");
            for (int k = 0; k < K; ++k) g(k) = v[k].get<double>();
        } else {
            throw ConstraintError("'" + key + "' must be a number or a list");
        }
        if (db) g = (g.array() / 10.0 * std::log(10.0)).exp().matrix();
        return g;
    };
    if (j.contains(key)) return expand(j[key], false);
    if (j.contains(key + "_db")) return expand(j[key + "_db"], true);
    if (def) return RVec::Constant(K, *def);
    throw ConstraintError("scenario needs '" + key + "' or '" + key + "_db'");
}

double sigma2_of(const json& j)
{
    if (j.contains("sigma2")) return num(j, "sigma2", 1.0);
    if (j.contains("snr_db")) return presets::sigma2_from_db(num(j, "snr_db", 0.0));
    throw ConstraintError("scenario needs 'snr_db' or 'sigma2'");
}

}  // namespace

bool axis_supported(const json& j, const std::string& axis)
{
    if (axis == "z" || axis == "snr_db") return true;
    if (!j.contains("preset")) return false;
    const auto& p = preset_params(j["preset"].get<std::string>());
    return std::find(p.begin(), p.end(), axis) != p.end();
}

Scenario scenario_from_json(const json& j0, const std::string& base, const std::string& axis, double value)
{
    if (!j0.is_object()) throw ConstraintError("scenario must be a JSON object");
    json j = j0;
    if (!axis.empty() && axis != "z") {
        if (!axis_supported(j, axis)) throw ConstraintError("sweep axis '" + axis + "' is not supported by this scenario");
        if (axis == "snr_db") j.erase("sigma2");
        j[axis] = value;
    }
    Scenario sc;
    if (j.contains("preset")) {
        const std::string name = j["preset"].get<std::string>();
        preset_params(name);  // validates the name
        const double snr = num(j, "snr_db", 80.0);
        if (name == "uncommon_linear")
            sc = presets::uncommon_linear(integer(j, "M", 16), integer(j, "K", 12), integer(j, "L", 32), snr);
        else if (name == "common_planar")
            sc = presets::common_planar(integer(j, "M", 20), integer(j, "K", 8), snr, num(j, "W", 2.0));
        else if (name == "common_planar_homogeneous")
            sc = presets::common_planar_homogeneous(integer(j, "M", 20), integer(j, "K", 8), snr, num(j, "W", 2.0));
        else
            sc = presets::iid(integer(j, "M", 16), integer(j, "K", 8), integer(j, "L", 32), num(j, "u", 1.0),
                              num(j, "t", 1.0), snr);
        if (j.contains("sigma2")) sc.sigma2 = num(j, "sigma2", 1.0);
        if (j.contains("id")) sc.id = j["id"].get<std::string>();
        sc.validate();
        return sc;
    }

    sc.id = j.value("id", std::string("scenario"));
    const std::string mode = j.value("mode", std::string("common"));
    if (mode == "uncommon") sc.corr.mode = CorrelationMode::uncommon;
    else if (mode == "common") sc.corr.mode = CorrelationMode::common;
    else if (mode == "iid") sc.corr.mode = CorrelationMode::iid;
    else throw ConstraintError("unknown correlation mode '" + mode + "'");

    const int M = integer(j, "M", 0), K = integer(j, "K", 0), L = integer(j, "L", 0);
    sc.dims = {M, K, L, integer(j, "M_tot", M)};
    const int Mt = sc.dims.M_tot;
    if (sc.corr.mode == CorrelationMode::iid) {
        sc.corr.R_tot = CMat::Identity(Mt, Mt);
        sc.corr.F_tot = {CMat::Identity(Mt, Mt)};
        sc.corr.C_L = CMat::Identity(L, L);
        sc.corr.C_R = {CMat::Identity(L, L)};
    } else {
        for (const char* key : {"R_tot", "F_tot", "C_L", "C_R"})
            if (!j.contains(key)) throw ConstraintError(std::string("scenario needs '") + key + "'");
        sc.corr.R_tot = matrix_from_json(j["R_tot"], base, "R_tot");
        sc.corr.F_tot = matrix_list(j["F_tot"], base, "F_tot");
        sc.corr.C_L = matrix_from_json(j["C_L"], base, "C_L");
        sc.corr.C_R = matrix_list(j["C_R"], base, "C_R");
    }

    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        const double C = std::pow(10.0, num(g, "ref_gain_db", -20.0) / 10.0);
        const double d0 = num(g, "d_bs_ris", presets::kBsRis);
        const double ang = num(g, "angle_deg", presets::kLinkAngle);
        RVec d = gains(g, "d_ris", K);
        sc.t.resize(K);
        sc.u.resize(K);
        for (int k = 0; k < K; ++k) {
            sc.t(k) = path_loss({C, num(g, "alpha_ris", presets::kAlphaRis), d(k)});
            sc.u(k) = path_loss({C, num(g, "alpha_direct", presets::kAlphaDirect), cosine_rule_distance(d0, d(k), ang)});
        }
    } else {
        sc.u = gains(j, "u", K);
        sc.t = gains(j, "t", K);
    }
    sc.p = gains(j, "p", K, 1.0);
    sc.sigma2 = sigma2_of(j);
    sc.validate();
    return sc;
}

PortSelection selection_from_json(const json& j, const Scenario& sc)
{
    const int Mt = sc.dims.M_tot, M = sc.dims.M;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "first") return PortSelection::first(Mt, M);
        if (s == "uniform") return PortSelection::uniform(Mt, M);
        throw ConstraintError("selection must be \"first\", \"uniform\" or an index list");
    }
    if (j.is_array()) {
        PortSelection ps = PortSelection::from_indices(Mt, j.get<std::vector<int>>());
        ps.validate(Mt, M);
        return ps;
    }
    throw ConstraintError("selection must be \"first\", \"uniform\" or an index list");
}

PhaseShifts phases_from_json(const json& j, const Scenario& sc)
{
    const int L = sc.dims.L;
    if (j.is_string() && j.get<std::string>() == "zeros") return PhaseShifts::zeros(L);
    if (j.is_array()) {
        if (int(j.size()) != L) throw ConstraintError("phases need " + std::to_string(L) + " angles");
        RVec a(L);
        for (int l = 0; l < L; ++l) a(l) = j[l].get<double>();
        return PhaseShifts::from_angles(a);
    }
    throw ConstraintError("phases must be \"zeros\" or a list of angles in radians");
}

// --- experiment config ----------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir)
{
    ExperimentConfig c;
    c.base_dir = base_dir;
    if (!j.contains("scenario")) throw ConstraintError("config needs a \"scenario\"");
    c.scenario = j["scenario"];
    if (j.contains("selection")) c.selection = j["selection"];
    if (j.contains("phases")) c.phases = j["phases"];
    if (j.contains("z")) {
        if (j["z"].is_number()) c.z = j["z"].get<double>();
        else if (!(j["z"].is_string() && j["z"].get<std::string>() == "default"))
            throw ConstraintError("z must be a number or \"default\"");
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        c.axis_name = s.value("axis", std::string("snr_db"));
        if (!s.contains("values") || !s["values"].is_array())
            throw ConstraintError("sweep needs a \"values\" list");
        c.axis_values = s["values"].get<std::vector<double>>();
    } else {
        c.axis_name = "snr_db";
        const json& sj = c.scenario;
        if (sj.contains("sigma2") && !sj.contains("snr_db"))
            c.axis_values = {-10.0 * std::log10(sj["sigma2"].get<double>())};
        else
            c.axis_values = {sj.value("snr_db", 80.0)};
    }
    if (j.contains("precoders")) {
        c.precoders.clear();
        for (const auto& p : j["precoders"]) c.precoders.push_back(precoder_from_string(p.get<std::string>()));
    }
    if (j.contains("methods")) {
        c.de = c.mc = false;
        for (const auto& m : j["methods"]) {
            const std::string s = m.get<std::string>();
            if (s == "DE") c.de = true;
            else if (s == "MC") c.mc = true;
            else throw ConstraintError("unknown method '" + s + "' (expected DE or MC)");
        }
    }
    c.trials = integer(j, "trials", c.trials);
    c.seed = std::uint64_t(num(j, "seed", double(c.seed)));
    if (j.contains("solver")) {
        c.solver.tol = num(j["solver"], "tol", c.solver.tol);
        c.solver.max_iter = integer(j["solver"], "max_iter", c.solver.max_iter);
    }
    if (j.contains("output")) {
        c.csv_path = j["output"].value("csv", c.csv_path);
        c.svg_path = j["output"].value("svg", c.svg_path);
    }
    return c;
}

void ExperimentConfig::validate() const
{
    if (axis_values.empty()) throw ConstraintError("sweep values must not be empty");
    for (std::size_t i = 0; i < axis_values.size(); ++i) {
        if (!std::isfinite(axis_values[i])) throw ConstraintError("sweep values must be finite");
        if (i && !(axis_values[i] > axis_values[i - 1]))
            throw ConstraintError("sweep values must be strictly increasing");
    }
    if (!axis_supported(scenario, axis_name))
        throw ConstraintError("sweep axis '" + axis_name + "' is not supported by this scenario");
    if (axis_name == "z") {
        if (axis_values.front() <= 0) throw ConstraintError("z values must be positive");
        for (Precoder p : precoders)
            if (p != Precoder::rzf) throw ConstraintError("a z sweep only makes sense for RZF");
    }
    if (precoders.empty()) throw ConstraintError("no precoder selected");
    if (!de && !mc) throw ConstraintError("no method selected");
    if (mc && trials < 1) throw ConstraintError("trials must be >= 1");
    if (z && !(*z > 0)) throw ConstraintError("z must be positive");
    solver.validate();
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConstraintError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConstraintError(path + ": " + e.what());
    }
    std::string base = fs::path(path).parent_path().string();
    if (base.empty()) base = ".";
    return ExperimentConfig::from_json(j, base);
}

// --- running -------------------------------------------------------------------------

std::vector<ExperimentRow> evaluate_point(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                          const std::vector<Precoder>& precoders, double z,
                                          const std::string& axis_name, double axis_value, const PointOptions& o)
{
    using Clock = std::chrono::steady_clock;
    auto since = [](Clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };
    std::vector<ExperimentRow> rows;
    for (Precoder p : precoders) {
        const ExperimentRow base{sc.id, axis_name, axis_value, to_string(p), "", 0, 0, 0};
        if (o.de) {
            auto t0 = Clock::now();
            EvalOptions eo;
            eo.solver = o.solver;
            std::optional<double> esr;
            try {
                esr = deterministic_esr(sc, s, phi, p, z, eo).esr;
            } catch (const DomainError&) {
                if (p != Precoder::mrt) throw;
            }
            if (esr) {
                ExperimentRow r = base;
                r.method = "DE";
                r.esr = *esr;
                r.runtime_ms = since(t0);
                rows.push_back(r);
            }
        }
        if (o.mc) {
            auto t0 = Clock::now();
            McOptions mo;
            mo.trials = o.trials;
            mo.seed = o.seed;
            const PrecoderKind kind = p == Precoder::rzf ? PrecoderKind::rzf(z)
                                      : p == Precoder::zf ? PrecoderKind::zf()
                                                          : PrecoderKind::mrt();
            const EsrEstimate e = empirical_esr(sc, s, phi, kind, mo);
            ExperimentRow r = base;
            r.method = "MC";
            r.esr = e.mean;
            r.stderr_ = e.stderr_;
            r.runtime_ms = since(t0);
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const int n = int(cfg.axis_values.size());
    std::vector<std::vector<ExperimentRow>> per_point(n);
    std::vector<std::exception_ptr> errors(n);
    PointOptions po;
    po.de = cfg.de;
    po.mc = cfg.mc;
    po.trials = cfg.trials;
    po.seed = cfg.seed;
    po.solver = cfg.solver;

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            const double v = cfg.axis_values[i];
            const Scenario sc = scenario_from_json(cfg.scenario, cfg.base_dir, cfg.axis_name, v);
            const PortSelection s = selection_from_json(cfg.selection, sc);
            const PhaseShifts phi = phases_from_json(cfg.phases, sc);
            const double z = cfg.axis_name == "z" ? v : cfg.z.value_or(default_regularizer(sc));
            per_point[i] = evaluate_point(sc, s, phi, cfg.precoders, z, cfg.axis_name, v, po);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<ExperimentRow> rows;
    for (auto& v : per_point) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows, bool timing)
{
    std::ostringstream os;
    os << kExperimentHeader << '\n';
    for (const auto& r : rows)
        os << r.scenario_id << ',' << r.axis_name << ',' << format_number(r.axis_value) << ',' << r.precoder << ','
           << r.method << ',' << format_number(r.esr) << ',' << format_number(r.stderr_) << ','
           << format_number(timing ? r.runtime_ms : 0.0) << '\n';
    return os.str();
}

}  // namespace fasris
