#pragma once

#include <cstdint>

namespace qgrp {

using NodeId = std::int32_t;
using FlowId = std::int32_t;

inline constexpr NodeId kNoNode = -1;

}  // namespace qgrp
