#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <json.hpp>
#include <hip/io.hpp>

namespace hip::io {

using nlohmann::json;

namespace {

[[noreturn]] void io_error(const std::string& message)
{
    throw Error(ErrorKind::io, message);
}

[[noreturn]] void data_error(const std::string& message)
{
    throw Error(ErrorKind::data, message);
}

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error("cannot write " + path.string());
    return out;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') quoted = !quoted;
        else if (c == ',' && !quoted) {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') cell += c;
    }
    cells.push_back(cell);
    return cells;
}

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) data_error("ragged matrix in model file");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

json vector_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j)
{
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json transform_json(const ColumnTransform& t)
{
    return {{"mean", vector_json(t.mean)}, {"scale", vector_json(t.scale)}};
}

ColumnTransform transform_from_json(const json& j)
{
    return {vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
}

int index_of(const std::vector<std::string>& names, const std::string& name, const std::string& what)
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    data_error("unknown " + what + " '" + name + "'");
}

} // namespace

std::string format_double(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error("cannot read " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) data_error(path.string() + " is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    table.header = split_line(line);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            data_error(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size())
                       + " fields, found " + std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) {
            std::size_t b = cell.find_first_not_of(" \t");
            std::size_t e = cell.find_last_not_of(" \t");
            if (b == std::string::npos) data_error(path.string() + ":" + std::to_string(line_no) + ": missing value");
            const char* first = cell.data() + b;
            const char* last = cell.data() + e + 1;
            if (*first == '+') ++first;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                data_error(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& values)
{
    auto out = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << quote(header[j]);
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

Bundle load_manifest(const fs::path& manifest)
{
    json j;
    try {
        j = json::parse(read_text(manifest));
    } catch (const json::parse_error& e) {
        data_error(manifest.string() + ": " + e.what());
    }
    const fs::path base = manifest.parent_path();
    auto resolve = [&base](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    try {
        const auto view_names = j.at("views").get<std::vector<std::string>>();
        const auto subgroup_names = j.at("subgroups").get<std::vector<std::string>>();
        const int D = static_cast<int>(view_names.size()), S = static_cast<int>(subgroup_names.size());
        if (D == 0 || S == 0) data_error("manifest needs at least one view and one subgroup");

        std::vector<int> gamma = j.value("gamma", std::vector<int>(D, 1));
        Outcome outcome;
        const std::string type = j.contains("outcome") ? j["outcome"].value("type", "continuous") : "continuous";
        if (type == "continuous") outcome.kind = OutcomeKind::continuous;
        else if (type == "multiclass") outcome.kind = OutcomeKind::multiclass;
        else data_error("unknown outcome type '" + type + "'");

        std::vector<std::vector<Matrix>> views(D, std::vector<Matrix>(S));
        std::vector<std::vector<std::string>> variable_names(D);
        std::vector<std::vector<char>> seen(D, std::vector<char>(S, 0));
        for (const auto& entry : j.at("x")) {
            const int d = index_of(view_names, entry.at("view").get<std::string>(), "view");
            const int s = index_of(subgroup_names, entry.at("subgroup").get<std::string>(), "subgroup");
            if (seen[d][s]) data_error("duplicate X entry for " + view_names[d] + "/" + subgroup_names[s]);
            seen[d][s] = 1;
            CsvTable t = read_csv(resolve(entry.at("path").get<std::string>()));
            if (variable_names[d].empty()) variable_names[d] = t.header;
            else if (variable_names[d] != t.header) {
                data_error("variable names of view " + view_names[d] + " differ between subgroups");
            }
            views[d][s] = std::move(t.values);
        }
        for (int d = 0; d < D; ++d)
            for (int s = 0; s < S; ++s)
                if (!seen[d][s]) data_error("manifest lacks X for " + view_names[d] + "/" + subgroup_names[s]);

        if (j.contains("y")) {
            outcome.y.resize(S);
            std::vector<char> have(S, 0);
            for (const auto& entry : j.at("y")) {
                const int s = index_of(subgroup_names, entry.at("subgroup").get<std::string>(), "subgroup");
                CsvTable t = read_csv(resolve(entry.at("path").get<std::string>()));
                if (outcome.names.empty()) outcome.names = t.header;
                else if (outcome.names != t.header) data_error("outcome columns differ between subgroups");
                outcome.y[s] = std::move(t.values);
                have[s] = 1;
            }
            for (int s = 0; s < S; ++s)
                if (!have[s]) data_error("manifest lacks Y for " + subgroup_names[s]);
        } else if (j.contains("outcome") && j["outcome"].contains("names")) {
            outcome.names = j["outcome"]["names"].get<std::vector<std::string>>();
        }

        Bundle bundle{MultiViewDataset(std::move(views), std::move(outcome), std::move(gamma),
                                       std::move(variable_names), subgroup_names, view_names),
                      std::nullopt};
        if (j.contains("truth")) bundle.truth = resolve(j["truth"].get<std::string>());
        return bundle;
    } catch (const json::exception& e) {
        data_error(manifest.string() + ": " + e.what());
    }
}

fs::path write_bundle(const fs::path& dir, const MultiViewDataset& data, const std::optional<std::string>& truth_file)
{
    fs::create_directories(dir);
    json j;
    j["views"] = data.view_names();
    j["subgroups"] = data.subgroup_names();
    j["gamma"] = data.gamma();
    j["outcome"] = {{"type", data.outcome().kind == OutcomeKind::continuous ? "continuous" : "multiclass"},
                    {"names", data.outcome().names}};
    j["x"] = json::array();
    for (int d = 0; d < data.num_views(); ++d) {
        for (int s = 0; s < data.num_subgroups(); ++s) {
            const std::string file = "x_" + data.view_names()[d] + "_" + data.subgroup_names()[s] + ".csv";
            write_csv(dir / file, data.variable_names()[d], data.x(d, s));
            j["x"].push_back({{"view", data.view_names()[d]}, {"subgroup", data.subgroup_names()[s]}, {"path", file}});
        }
    }
    if (data.outcome().present()) {
        j["y"] = json::array();
        for (int s = 0; s < data.num_subgroups(); ++s) {
            const std::string file = "y_" + data.subgroup_names()[s] + ".csv";
            write_csv(dir / file, data.outcome().names, data.y(s));
            j["y"].push_back({{"subgroup", data.subgroup_names()[s]}, {"path", file}});
        }
    }
    if (truth_file) j["truth"] = *truth_file;
    const fs::path manifest = dir / "manifest.json";
    auto out = open_out(manifest);
    out << j.dump(2) << '\n';
    return manifest;
}

void write_truth(const fs::path& path, const MultiViewDataset& data,
                 const std::vector<std::vector<std::vector<int>>>& signal)
{
    auto out = open_out(path);
    out << "view,subgroup,variable\n";
    for (std::size_t d = 0; d < signal.size(); ++d)
        for (std::size_t s = 0; s < signal[d].size(); ++s)
            for (int l : signal[d][s])
                out << quote(data.view_names()[d]) << ',' << quote(data.subgroup_names()[s]) << ',' << l << '\n';
}

std::vector<std::vector<std::vector<int>>> read_truth(const fs::path& path, const MultiViewDataset& data)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error("cannot read " + path.string());
    std::vector<std::vector<std::vector<int>>> signal(
        data.num_views(), std::vector<std::vector<int>>(data.num_subgroups()));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (cells.size() != 3) data_error(path.string() + ": truth rows need view,subgroup,variable");
        const int d = index_of(data.view_names(), cells[0], "view");
        const int s = index_of(data.subgroup_names(), cells[1], "subgroup");
        int l = 0;
        auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), l);
        if (ec != std::errc() || l < 0 || l >= data.dims().p[d]) data_error(path.string() + ": bad variable index " + cells[2]);
        signal[d][s].push_back(l);
    }
    for (auto& view : signal)
        for (auto& set : view) std::sort(set.begin(), set.end());
    return signal;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const FactorModel& m)
{
    json j;
    j["format"] = "hip-model";
    j["version"] = 1;
    j["outcome"] = m.outcome == OutcomeKind::continuous ? "continuous" : "multiclass";
    j["gamma"] = m.gamma;
    j["hyperparameters"] = {{"lambda_g", m.hyper.lambda_g},
                            {"lambda_xi", m.hyper.lambda_xi},
                            {"K", m.hyper.K},
                            {"eps_outer", m.hyper.eps_outer},
                            {"eps_inner", m.hyper.eps_inner},
                            {"max_outer_iters", m.hyper.max_outer_iters},
                            {"max_inner_iters", m.hyper.max_inner_iters},
                            {"ridge_eps", m.hyper.ridge_eps}};
    json dims;
    dims["views"] = m.num_views();
    dims["subgroups"] = m.num_subgroups();
    dims["K"] = m.components();
    std::vector<Eigen::Index> n, p;
    for (const auto& z : m.Z) n.push_back(z.rows());
    for (const auto& g : m.G) p.push_back(g.rows());
    dims["n"] = n;
    dims["p"] = p;
    dims["outcome_cols"] = m.Theta.cols();
    j["dimensions"] = dims;
    j["status"] = to_string(m.status);
    j["outer_iterations"] = m.outer_iterations;
    j["inner_nonconverged"] = m.inner_nonconverged;
    j["names"] = {{"views", m.view_names},
                  {"subgroups", m.subgroup_names},
                  {"variables", m.variable_names},
                  {"outcome", m.outcome_names}};

    j["G"] = json::array();
    for (const auto& g : m.G) j["G"].push_back(matrix_json(g));
    j["Xi"] = json::array();
    for (const auto& view : m.Xi) {
        json row = json::array();
        for (const auto& xi : view) row.push_back(matrix_json(xi));
        j["Xi"].push_back(std::move(row));
    }
    j["Z"] = json::array();
    for (const auto& z : m.Z) j["Z"].push_back(matrix_json(z));
    j["Theta"] = matrix_json(m.Theta);

    json st;
    st["x"] = json::array();
    for (const auto& view : m.standardizer.x) {
        json row = json::array();
        for (const auto& t : view) row.push_back(transform_json(t));
        st["x"].push_back(std::move(row));
    }
    st["y"] = json::array();
    for (const auto& t : m.standardizer.y) st["y"].push_back(transform_json(t));
    st["warnings"] = m.standardizer.warnings;
    j["standardizer"] = st;

    j["trace"] = json::array();
    for (const auto& r : m.trace) j["trace"].push_back({r.unpenalized, r.penalty, r.penalized});
    j["warnings"] = m.warnings;
    return j.dump(1);
}

FactorModel model_from_json(const std::string& text)
{
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "hip-model") data_error("not a model file");
        FactorModel m;
        m.outcome = j.at("outcome").get<std::string>() == "multiclass" ? OutcomeKind::multiclass : OutcomeKind::continuous;
        m.gamma = j.at("gamma").get<std::vector<int>>();
        const json& h = j.at("hyperparameters");
        m.hyper.lambda_g = h.at("lambda_g");
        m.hyper.lambda_xi = h.at("lambda_xi");
        m.hyper.K = h.at("K");
        m.hyper.eps_outer = h.at("eps_outer");
        m.hyper.eps_inner = h.at("eps_inner");
        m.hyper.max_outer_iters = h.at("max_outer_iters");
        m.hyper.max_inner_iters = h.at("max_inner_iters");
        m.hyper.ridge_eps = h.at("ridge_eps");

        const std::string status = j.at("status");
        m.status = status == "converged" ? FitStatus::converged
                 : status == "diverged"  ? FitStatus::diverged
                                         : FitStatus::max_iterations;
        m.outer_iterations = j.value("outer_iterations", 0);
        m.inner_nonconverged = j.value("inner_nonconverged", 0);
        const json& names = j.at("names");
        m.view_names = names.at("views");
        m.subgroup_names = names.at("subgroups");
        m.variable_names = names.at("variables").get<std::vector<std::vector<std::string>>>();
        m.outcome_names = names.at("outcome");

        const Eigen::Index K = j.at("dimensions").at("K");
        for (const auto& g : j.at("G")) m.G.push_back(matrix_from_json(g, K));
        for (const auto& view : j.at("Xi")) {
            std::vector<Matrix> row;
            for (const auto& xi : view) row.push_back(matrix_from_json(xi, K));
            m.Xi.push_back(std::move(row));
        }
        for (const auto& z : j.at("Z")) m.Z.push_back(matrix_from_json(z, K));
        m.Theta = matrix_from_json(j.at("Theta"));

        const json& st = j.at("standardizer");
        for (const auto& view : st.at("x")) {
            std::vector<ColumnTransform> row;
            for (const auto& t : view) row.push_back(transform_from_json(t));
            m.standardizer.x.push_back(std::move(row));
        }
        for (const auto& t : st.at("y")) m.standardizer.y.push_back(transform_from_json(t));
        m.standardizer.warnings = st.value("warnings", std::vector<std::string>{});

        for (const auto& r : j.at("trace")) m.trace.push_back({r.at(0), r.at(1), r.at(2)});
        m.warnings = j.value("warnings", std::vector<std::string>{});

        if (m.G.size() != m.Xi.size() || m.gamma.size() != m.G.size()) data_error("model file has inconsistent view counts");
        for (std::size_t d = 0; d < m.G.size(); ++d) {
            if (m.Xi[d].size() != m.Z.size()) data_error("model file has inconsistent subgroup counts");
            for (const auto& xi : m.Xi[d])
                if (xi.rows() != m.G[d].rows() || xi.cols() != m.G[d].cols()) data_error("model file: Xi and G shapes differ");
        }
        return m;
    } catch (const json::exception& e) {
        data_error(std::string("model file: ") + e.what());
    }
}

void save_model(const fs::path& path, const FactorModel& model)
{
    auto out = open_out(path);
    out << model_to_json(model) << '\n';
}

FactorModel load_model(const fs::path& path)
{
    return model_from_json(read_text(path));
}

// ---------------------------------------------------------------------------

void write_selection(const fs::path& path, const SelectionReport& report)
{
    auto out = open_out(path);
    out << "view,subgroup,variable,times_selected,weight\n";
    for (std::size_t d = 0; d < report.selected.size(); ++d)
        for (std::size_t s = 0; s < report.selected[d].size(); ++s)
            for (const auto& v : report.selected[d][s])
                out << quote(report.view_names[d]) << ',' << quote(report.subgroup_names[s]) << ','
                    << quote(v.name) << ',' << v.times_selected << ',' << format_double(v.weight) << '\n';
}

void write_loss_trace(const fs::path& path, const LossTrace& trace)
{
    auto out = open_out(path);
    out << "iteration,unpenalized,penalty,penalized\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i + 1 << ',' << format_double(trace[i].unpenalized) << ',' << format_double(trace[i].penalty) << ','
            << format_double(trace[i].penalized) << '\n';
}

void write_bic_table(const fs::path& path, const std::vector<BicRecord>& records)
{
    auto out = open_out(path);
    out << "K,lambda_g,lambda_xi,bic,model_size,loss,status\n";
    for (const auto& r : records)
        out << r.K << ',' << format_double(r.lambda.lambda_g) << ',' << format_double(r.lambda.lambda_xi) << ','
            << format_double(r.bic) << ',' << r.model_size << ',' << format_double(r.loss) << ',' << to_string(r.status)
            << '\n';
}

void write_predictions(const fs::path& path, const FactorModel& model, const MultiViewDataset& test,
                       const PredictionResult& prediction)
{
    auto out = open_out(path);
    out << "subgroup,sample";
    const bool continuous = model.outcome == OutcomeKind::continuous;
    if (continuous) {
        for (const auto& name : model.outcome_names) out << ',' << quote(name);
    } else {
        out << ",label";
        for (const auto& name : model.outcome_names) out << ",prob_" << quote(name);
    }
    out << '\n';
    for (int s = 0; s < test.num_subgroups(); ++s) {
        const std::size_t ss = static_cast<std::size_t>(s);
        for (int i = 0; i < test.dims().n[s]; ++i) {
            out << quote(test.subgroup_names()[ss]) << ',' << i;
            if (continuous) {
                for (Eigen::Index j = 0; j < prediction.y[ss].cols(); ++j) out << ',' << format_double(prediction.y[ss](i, j));
            } else {
                const int label = prediction.labels[ss][static_cast<std::size_t>(i)];
                out << ',' << quote(model.outcome_names[static_cast<std::size_t>(label)]);
                for (Eigen::Index j = 0; j < prediction.probabilities[ss].cols(); ++j)
                    out << ',' << format_double(prediction.probabilities[ss](i, j));
            }
            out << '\n';
        }
    }
}

void write_scree(const fs::path& path, const Vector& values)
{
    auto out = open_out(path);
    out << "k,value,percent_change\n";
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        out << k + 1 << ',' << format_double(values(k)) << ',';
        if (k + 1 < values.size() && values(k) > 0.0) out << format_double((values(k) - values(k + 1)) / values(k));
        out << '\n';
    }
}

} // namespace hip::io
