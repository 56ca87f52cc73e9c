#pragma once

// On-disk formats: CSV (cell coordinates + m values), raw little-endian
// binary with a JSON sidecar header {dim, n, period, m, t}, and the CSV
// series written by the run commands.

#include <bit>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjsys/evolutive.hpp"

static_assert(std::endian::native == std::endian::little,
              "field binaries are little-endian; adjust the I/O layer first");

namespace hjsys {

inline void write_field_csv(const std::filesystem::path& path, const VectorGridField& field) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << std::setprecision(17);
    out << "x";
    if (field.grid.dim == 2) out << ",y";
    for (int i = 0; i < field.m(); ++i) out << ",u" << i;
    out << "\n";
    for (long cell = 0; cell < field.grid.cell_count(); ++cell) {
        const Point x = field.grid.coord(cell);
        out << x[0];
        if (field.grid.dim == 2) out << "," << x[1];
        for (int i = 0; i < field.m(); ++i) out << "," << field.comp[i][cell];
        out << "\n";
    }
}

inline void write_field_binary(const std::filesystem::path& base, const VectorGridField& field) {
    std::ofstream bin(base.string() + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot open " + base.string() + ".bin");
    for (const auto& comp : field.comp)
        bin.write(reinterpret_cast<const char*>(comp.data()),
                  static_cast<std::streamsize>(comp.size() * sizeof(double)));

    nlohmann::json header{{"dim", field.grid.dim},
                          {"n", field.grid.n},
                          {"period", field.grid.period},
                          {"m", field.m()},
                          {"t", field.t}};
    std::ofstream side(base.string() + ".json");
    side << header.dump(2) << "\n";
}

inline VectorGridField read_field_binary(const std::filesystem::path& base) {
    std::ifstream side(base.string() + ".json");
    if (!side) throw Error("cannot open " + base.string() + ".json");
    nlohmann::json header = nlohmann::json::parse(side);
    const TorusGrid grid(header.at("dim").get<int>(), header.at("n").get<int>(),
                         header.at("period").get<double>());
    VectorGridField field(grid, header.at("m").get<int>());
    field.t = header.at("t").get<double>();
    std::ifstream bin(base.string() + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot open " + base.string() + ".bin");
    for (auto& comp : field.comp)
        bin.read(reinterpret_cast<char*>(comp.data()),
                 static_cast<std::streamsize>(comp.size() * sizeof(double)));
    if (!bin) throw Error("short read on " + base.string() + ".bin");
    return field;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << std::setprecision(17);
    const int m = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().sup.size());
    out << "t";
    for (int i = 0; i < m; ++i)
        out << ",sup" << i << ",inf" << i << ",lip" << i << ",residual" << i;
    out << "\n";
    for (const auto& s : log.samples) {
        out << s.t;
        for (int i = 0; i < m; ++i)
            out << "," << s.sup[i] << "," << s.inf[i] << "," << s.lipschitz[i] << ","
                << s.residual[i];
        out << "\n";
    }
}

}  // namespace hjsys
