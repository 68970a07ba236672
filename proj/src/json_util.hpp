#pragma once

#include <json.hpp>

#include "cohortsurv/model_table.hpp"

namespace cohortsurv {

nlohmann::ordered_json model_table_json(const ModelTable& table);

}  // namespace cohortsurv
