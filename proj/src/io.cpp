#include "mfgsens/io.hpp"

#include <fstream>
#include <ios>
#include <sstream>

namespace mfgsens {

using nlohmann::json;

namespace {

json spec_json(std::string_view family, const std::vector<double>& params) {
    return json{{"family", std::string(family)}, {"params", params}};
}

}  // namespace

json to_json(const ModelParams& p) {
    return json{{"sigma", p.sigma},
                {"r", p.r},
                {"T", p.T},
                {"epsilon", p.epsilon},
                {"xi", spec_json(to_string(p.xi.family), p.xi.params)},
                {"M", spec_json(to_string(p.M.family), p.M.params)},
                {"uT", spec_json(to_string(p.uT.family), p.uT.params)}};
}

json to_json(const Discretization& d) {
    return json{{"L", d.L}, {"T", d.T}, {"Nx", d.Nx}, {"Nt", d.Nt}};
}

json to_json(const SolveOptions& o) {
    return json{{"tol", o.tol}, {"max_iter", o.max_iter}, {"damping", o.damping}};
}

json to_json(const NormTriple& n) {
    return json{{"sup_val", n.sup_val}, {"sup_dx", n.sup_dx}, {"sup_dxx", n.sup_dxx}};
}

ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.sigma = j.at("sigma").get<double>();
    p.r = j.at("r").get<double>();
    p.T = j.at("T").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    p.xi = {parse_time_family(j.at("xi").at("family").get<std::string>()),
            j.at("xi").at("params").get<std::vector<double>>()};
    p.M = {parse_function_family(j.at("M").at("family").get<std::string>()),
           j.at("M").at("params").get<std::vector<double>>()};
    p.uT = {parse_function_family(j.at("uT").at("family").get<std::string>()),
            j.at("uT").at("params").get<std::vector<double>>()};
    return p;
}

Discretization disc_from_json(const json& j) {
    return Discretization::make(j.at("L").get<double>(), j.at("T").get<double>(),
                                j.at("Nx").get<int>(), j.at("Nt").get<int>());
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw std::ios_base::failure("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::ios_base::failure("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_field(const std::filesystem::path& path, const Field& f) {
    std::ostringstream ss;
    write_field_csv(ss, f);
    write_text(path, ss.str());
}

Field read_field(const std::filesystem::path& path, const Discretization& disc) {
    std::istringstream ss(read_text(path));
    return read_field_csv(ss, disc);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace mfgsens
