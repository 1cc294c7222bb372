#pragma once

// On-disk formats. The binary container holds one grid, a list of h
// values, and one row-major complex block per h; a single sampled
// function is the one-h special case. Byte order is the native
// little-endian of every platform this targets. CSV output is for small
// grids and eyeballing only.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mlk/sweep.hpp"

namespace mlk {

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <class T>
void put_scalar(std::ostream& os, T v) {
  put_bytes(os, &v, sizeof v);
}
template <class T>
T get_scalar(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw error("container: truncated stream");
  return v;
}

inline void write_header(std::ostream& os, const Grid& g,
                         const std::vector<double>& h_values) {
  os.write("MLK1", 4);
  put_scalar<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  for (int d = 0; d < g.dim(); ++d) {
    put_scalar<double>(os, g.axis(d).lo);
    put_scalar<double>(os, g.axis(d).hi);
    put_scalar<std::uint64_t>(os, static_cast<std::uint64_t>(g.axis(d).n));
  }
  put_scalar<std::uint64_t>(os, h_values.size());
  for (double h : h_values) put_scalar<double>(os, h);
}

inline void write_block(std::ostream& os, const std::vector<cplx>& v) {
  for (const cplx& z : v) {
    put_scalar<double>(os, z.real());
    put_scalar<double>(os, z.imag());
  }
}

struct ContainerHeader {
  Grid grid;
  std::vector<double> h_values;
};

inline ContainerHeader read_header(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MLK1", 4) != 0)
    throw error("container: bad magic (expected MLK1)");
  auto dim = get_scalar<std::uint32_t>(is);
  if (dim != 1 && dim != 2) throw error("container: dim must be 1 or 2");
  Axis ax[2];
  for (std::uint32_t d = 0; d < dim; ++d) {
    ax[d].lo = get_scalar<double>(is);
    ax[d].hi = get_scalar<double>(is);
    ax[d].n = static_cast<std::int64_t>(get_scalar<std::uint64_t>(is));
  }
  Grid g = dim == 1 ? Grid(ax[0]) : Grid(ax[0], ax[1]);
  auto hcount = get_scalar<std::uint64_t>(is);
  if (hcount == 0) throw error("container: empty h list");
  std::vector<double> hs(hcount);
  for (auto& h : hs) h = get_scalar<double>(is);
  return ContainerHeader{g, std::move(hs)};
}

inline std::vector<cplx> read_block(std::istream& is, std::int64_t count) {
  std::vector<cplx> v(static_cast<std::size_t>(count));
  for (auto& z : v) {
    double re = get_scalar<double>(is);
    double im = get_scalar<double>(is);
    z = cplx(re, im);
  }
  return v;
}

}  // namespace detail

inline void write_container(std::ostream& os, const SampledFunction& u) {
  detail::write_header(os, u.grid, {u.h});
  detail::write_block(os, u.values);
}

inline void write_container(std::ostream& os, const HFamily& fam) {
  detail::write_header(os, fam.grid(), fam.h_values());
  for (std::size_t i = 0; i < fam.size(); ++i)
    detail::write_block(os, fam.member(i).values);
}

inline SampledFunction read_sampled_function(std::istream& is) {
  auto hdr = detail::read_header(is);
  if (hdr.h_values.size() != 1)
    throw error("container: expected a single-h block, got " +
                std::to_string(hdr.h_values.size()));
  auto v = detail::read_block(is, hdr.grid.size());
  return SampledFunction(hdr.grid, hdr.h_values[0], std::move(v));
}

inline HFamily read_h_family(std::istream& is) {
  auto hdr = detail::read_header(is);
  std::vector<SampledFunction> members;
  members.reserve(hdr.h_values.size());
  for (double h : hdr.h_values)
    members.emplace_back(hdr.grid, h, detail::read_block(is, hdr.grid.size()));
  return HFamily(hdr.grid, hdr.h_values, std::move(members));
}

inline void write_container_file(const std::string& path,
                                 const SampledFunction& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("container: cannot open " + path + " for writing");
  write_container(os, u);
}

inline void write_container_file(const std::string& path, const HFamily& fam) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("container: cannot open " + path + " for writing");
  write_container(os, fam);
}

// Fixed-format double printing shared by every CSV/report writer; 17
// significant digits round-trips exactly and keeps reports byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const SampledFunction& u) {
  if (u.grid.dim() == 1) {
    os << "x,re,im\n";
    for (std::int64_t i = 0; i < u.grid.size(); ++i) {
      const cplx& z = u.values[static_cast<std::size_t>(i)];
      os << format_double(u.grid.axis(0).node(i)) << ','
         << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
    }
  } else {
    os << "x0,x1,re,im\n";
    for (std::int64_t flat = 0; flat < u.grid.size(); ++flat) {
      auto x = u.grid.node(flat);
      const cplx& z = u.values[static_cast<std::size_t>(flat)];
      os << format_double(x[0]) << ',' << format_double(x[1]) << ','
         << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
    }
  }
}

}  // namespace mlk
