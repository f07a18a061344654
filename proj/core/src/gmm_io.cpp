#include "physec/gmm_io.hpp"

#include "json_fields.hpp"
#include "physec/atomic_file.hpp"
#include "physec/error.hpp"

#include <fstream>
#include <sstream>

namespace physec {

using nlohmann::json;

nlohmann::json to_json(const GmmModel& model) {
    json comps = json::array();
    for (const auto& c : model.components()) {
        json cov = json::array();
        for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index col = 0; col < c.covariance.cols(); ++col) row.push_back(c.covariance(r, col));
            cov.push_back(std::move(row));
        }
        comps.push_back({{"weight", c.weight},
                         {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                         {"covariance", std::move(cov)}});
    }
    const auto& info = model.fit_info();
    return {{"dim", model.dim()},
            {"components", std::move(comps)},
            {"fit_info",
             {{"iterations", info.iterations},
              {"final_log_likelihood", info.final_log_likelihood},
              {"converged", info.converged},
              {"regularization_applied", info.regularization_applied}}}};
}

GmmModel gmm_from_json(const nlohmann::json& j) {
    using detail::field;
    const auto dim = field<std::size_t>(j, "dim");
    const auto& comps = detail::object_field(j, "components");
    if (!comps.is_array() || comps.empty()) throw ParseError("key 'components' must be a non-empty array");

    std::vector<GaussianComponent> out;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const std::string path = "components[" + std::to_string(k) + "]";
        GaussianComponent c;
        c.weight = field<double>(comps[k], "weight", path);
        const auto mean = field<std::vector<double>>(comps[k], "mean", path);
        const auto cov = field<std::vector<std::vector<double>>>(comps[k], "covariance", path);
        if (mean.size() != dim) throw ParseError("key '" + path + ".mean' has wrong length");
        if (cov.size() != dim) throw ParseError("key '" + path + ".covariance' has wrong shape");
        c.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(dim));
        c.covariance.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t r = 0; r < dim; ++r) {
            if (cov[r].size() != dim) throw ParseError("key '" + path + ".covariance' has wrong shape");
            for (std::size_t col = 0; col < dim; ++col)
                c.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = cov[r][col];
        }
        out.push_back(std::move(c));
    }

    FitInfo info;
    if (j.contains("fit_info")) {
        const auto& fi = j.at("fit_info");
        info.iterations = field<std::size_t>(fi, "iterations", "fit_info");
        info.converged = field<bool>(fi, "converged", "fit_info");
        info.regularization_applied = field<bool>(fi, "regularization_applied", "fit_info");
        // -inf is written as null by the JSON encoder.
        const auto& ll = detail::object_field(fi, "final_log_likelihood", "fit_info");
        if (ll.is_null()) {
            info.final_log_likelihood = -std::numeric_limits<double>::infinity();
        } else {
            info.final_log_likelihood = field<double>(fi, "final_log_likelihood", "fit_info");
        }
    }
    try {
        return GmmModel(std::move(out), std::move(info));
    } catch (const ContractError& e) {
        throw ParseError(std::string("invalid model: ") + e.what());
    }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_model(const std::filesystem::path& path, const GmmModel& model) {
    write_file_atomic(path, to_json(model).dump(2) + "\n");
}

GmmModel load_model(const std::filesystem::path& path) { return gmm_from_json(read_json_file(path)); }

}  // namespace physec
