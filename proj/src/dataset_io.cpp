#include "seb/dataset_io.hpp"

#include <fstream>
#include <string>

#include "seb/error.hpp"
#include "text_util.hpp"

namespace seb {

namespace {

constexpr std::string_view kOrdersMagic = "#seb-orders";
constexpr std::string_view kOrdersVersion = "v1";

}  // namespace

void write_orders(const std::vector<Order>& orders, std::size_t features, std::ostream& out) {
  std::string buf;
  buf += kOrdersMagic;
  buf += ' ';
  buf += kOrdersVersion;
  buf += " F=" + std::to_string(features) + '\n';
  for (const Order& o : orders) {
    if (o.telemetry.rank() != 2 || o.telemetry.rows() != kSequenceLength || o.telemetry.cols() != features) {
      throw ShapeError("order " + std::to_string(o.id) + " telemetry is " + shape_to_string(o.telemetry.shape()) +
                       ", expected [" + std::to_string(kSequenceLength) + "x" + std::to_string(features) + "]");
    }
    buf += std::to_string(o.id) + ',' + std::to_string(o.user.index) + ',' + std::to_string(o.battery.index) + ',' +
           std::to_string(o.t) + ',';
    text::append_double(buf, o.ride_length);
    buf += ',';
    text::append_double(buf, o.label);
    buf += '\n';
    for (std::size_t r = 0; r < kSequenceLength; ++r) {
      for (std::size_t c = 0; c < features; ++c) {
        if (c) buf += ',';
        text::append_double(buf, o.telemetry(r, c));
      }
      buf += '\n';
    }
    out << buf;
    buf.clear();
  }
  out << buf;
}

std::vector<Order> read_orders(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing orders header", lineno);
  const auto head = text::split(line, ' ');
  if (head.size() != 3 || head[0] != kOrdersMagic) throw ParseError("expected '#seb-orders v1 F=<n>' header", lineno);
  if (head[1] != kOrdersVersion) throw VersionError("unsupported orders version '" + std::string(head[1]) + "'", lineno);
  if (head[2].substr(0, 2) != "F=") throw ParseError("expected F=<features> in header", lineno);
  const std::size_t features = text::parse_u64(head[2].substr(2), lineno);
  if (features == 0) throw ParseError("feature count must be positive", lineno);

  std::vector<Order> orders;
  while (std::getline(in, line)) {
    ++lineno;
    const auto meta = text::split(line);
    if (meta.size() != 6) throw ParseError("expected order_id,user,battery,t,ride_length,label", lineno);
    Order o;
    o.id = text::parse_u64(meta[0], lineno);
    o.user = NodeRef::user(static_cast<std::uint32_t>(text::parse_u64(meta[1], lineno)));
    o.battery = NodeRef::battery(static_cast<std::uint32_t>(text::parse_u64(meta[2], lineno)));
    o.t = static_cast<std::uint32_t>(text::parse_u64(meta[3], lineno));
    o.ride_length = text::parse_double(meta[4], lineno);
    o.label = text::parse_double(meta[5], lineno);
    if (o.label < 0.0) throw ParseError("negative label", lineno);
    o.telemetry = Tensor({kSequenceLength, features});
    for (std::size_t r = 0; r < kSequenceLength; ++r) {
      if (!std::getline(in, line)) {
        throw ParseError("order " + std::to_string(o.id) + " ends after " + std::to_string(r) + " of " +
                             std::to_string(kSequenceLength) + " telemetry rows",
                         lineno + 1);
      }
      ++lineno;
      const auto cells = text::split(line);
      if (cells.size() != features) {
        throw ParseError("expected " + std::to_string(features) + " telemetry values, got " +
                             std::to_string(cells.size()),
                         lineno);
      }
      for (std::size_t c = 0; c < features; ++c) o.telemetry(r, c) = text::parse_double(cells[c], lineno);
    }
    orders.push_back(std::move(o));
  }
  return orders;
}

std::filesystem::path orders_path(const std::filesystem::path& dir) { return dir / "orders.seb"; }
std::filesystem::path graph_path(const std::filesystem::path& dir) { return dir / "graph.seb"; }

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::size_t features = data.orders.empty() ? kFeatureCount : data.orders.front().telemetry.cols();
  {
    std::ofstream out(orders_path(dir), std::ios::binary);
    if (!out) throw IoError("cannot write " + orders_path(dir).string());
    write_orders(data.orders, features, out);
    if (!out) throw IoError("failed writing " + orders_path(dir).string());
  }
  write_graph_file(data.graph, graph_path(dir));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(orders_path(dir), std::ios::binary);
  if (!in) throw IoError("cannot read " + orders_path(dir).string());
  Dataset d;
  d.orders = read_orders(in);
  d.graph = read_graph_file(graph_path(dir));
  for (const Order& o : d.orders) {
    if (o.user.index >= d.graph.num_users() || o.battery.index >= d.graph.num_batteries() ||
        o.t >= d.graph.horizon()) {
      throw LookupError("order " + std::to_string(o.id) + " refers to a node or timestep missing from the graph");
    }
  }
  return d;
}

}  // namespace seb
