#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "seb/scenario.hpp"

namespace seb {

// `#seb-orders v1 F=<features>`, then per order a metadata line
// `order_id,user,battery,t,ride_length,label` and 64 telemetry lines.
void write_orders(const std::vector<Order>& orders, std::size_t features, std::ostream& out);
std::vector<Order> read_orders(std::istream& in);

// <dir>/orders.seb and <dir>/graph.seb
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

std::filesystem::path orders_path(const std::filesystem::path& dir);
std::filesystem::path graph_path(const std::filesystem::path& dir);

}  // namespace seb
