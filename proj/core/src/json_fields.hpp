#pragma once

#include "physec/error.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace physec::detail {

// Reads j[key] as T, reporting the dotted key path when it is missing or the wrong type.
template <typename T>
T field(const nlohmann::json& j, const std::string& key, const std::string& path = {}) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!j.is_object() || !j.contains(key)) throw ParseError("missing key '" + where + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("invalid value for key '" + where + "'");
    }
}

inline const nlohmann::json& object_field(const nlohmann::json& j, const std::string& key,
                                          const std::string& path = {}) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!j.is_object() || !j.contains(key)) throw ParseError("missing key '" + where + "'");
    return j.at(key);
}

}  // namespace physec::detail
