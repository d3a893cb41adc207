#include "cirusv/model_io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace cirusv {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

nlohmann::ordered_json model_to_json(const CirModel& model) {
    nlohmann::ordered_json j;
    j["d"] = model.d;
    j["b"] = std::vector<double>(model.b.data(), model.b.data() + model.b.size());
    j["beta"] = nlohmann::ordered_json::array();
    for (int i = 0; i < model.d; ++i) {
        std::vector<double> row(model.d);
        for (int k = 0; k < model.d; ++k) row[static_cast<std::size_t>(k)] = model.beta(i, k);
        j["beta"].push_back(row);
    }
    j["sigma2"] = std::vector<double>(model.sigma2.data(), model.sigma2.data() + model.sigma2.size());
    j["rho"] = std::vector<double>(model.rho.data(), model.rho.data() + model.rho.size());
    return j;
}

namespace {

Vec parse_vector(const nlohmann::json& j, const char* key, int d) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("model: missing field \"") + key + "\"");
    const auto& arr = j.at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != d)
        throw std::invalid_argument(std::string("model: \"") + key + "\" must be an array of length d");
    Vec v(d);
    for (int i = 0; i < d; ++i) {
        if (!arr[static_cast<std::size_t>(i)].is_number())
            throw std::invalid_argument(std::string("model: \"") + key + "\" entries must be numbers");
        v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

}  // namespace

CirModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("model: top level must be a JSON object");
    if (!j.contains("d") || !j.at("d").is_number_integer())
        throw std::invalid_argument("model: missing integer field \"d\"");
    const int d = j.at("d").get<int>();
    if (d < 1) throw std::invalid_argument("model: \"d\" must be >= 1");

    CirModel model;
    model.d = d;
    model.b = parse_vector(j, "b", d);
    model.sigma2 = parse_vector(j, "sigma2", d);
    model.rho = parse_vector(j, "rho", d);

    if (!j.contains("beta") || !j.at("beta").is_array() || static_cast<int>(j.at("beta").size()) != d)
        throw std::invalid_argument("model: \"beta\" must be an array of d rows");
    model.beta.resize(d, d);
    for (int i = 0; i < d; ++i) {
        const auto& row = j.at("beta")[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw std::invalid_argument("model: each \"beta\" row must have d numbers");
        for (int k = 0; k < d; ++k) {
            if (!row[static_cast<std::size_t>(k)].is_number())
                throw std::invalid_argument("model: \"beta\" entries must be numbers");
            model.beta(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return model;
}

CirModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw std::invalid_argument(std::string("model file ") + path + ": " + ex.what());
    }
    return model_from_json(j);
}

std::string model_hash(const CirModel& model) {
    std::ostringstream os;
    os << "d=" << model.d << ";b=";
    for (int i = 0; i < model.d; ++i) os << format_double(model.b[i]) << ",";
    os << ";beta=";
    for (int i = 0; i < model.d; ++i)
        for (int k = 0; k < model.d; ++k) os << format_double(model.beta(i, k)) << ",";
    os << ";sigma2=";
    for (int i = 0; i < model.d; ++i) os << format_double(model.sigma2[i]) << ",";
    os << ";rho=";
    for (int i = 0; i < model.d; ++i) os << format_double(model.rho[i]) << ",";
    const std::string bytes = os.str();

    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

}  // namespace cirusv
