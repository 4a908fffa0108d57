#include <cmath>
#include <fstream>
#include <sstream>

#include "holotel/errors.hpp"
#include "holotel/teleport.hpp"

namespace holotel {

namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_header_int(std::istream& in, const char* what) {
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw BadImageFormat(std::string("missing ") + what);
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw BadImageFormat(std::string("bad ") + what);
  return value;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadImageFormat("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5")
    throw BadImageFormat("unsupported magic '" + magic + "' (want P2 or P5)");
  GrayImage img;
  img.nx = next_header_int(in, "width");
  img.ny = next_header_int(in, "height");
  img.maxval = next_header_int(in, "maxval");
  if (img.nx <= 0 || img.ny <= 0)
    throw BadImageFormat("non-positive image dimensions");
  if (img.maxval <= 0 || img.maxval > 65535)
    throw BadImageFormat("maxval must be in [1, 65535]");
  const std::size_t count = std::size_t(img.nx) * img.ny;
  img.pixels.resize(count);
  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> img.pixels[i])) throw BadImageFormat("truncated P2 data");
      if (img.pixels[i] < 0 || img.pixels[i] > img.maxval)
        throw BadImageFormat("P2 sample out of range");
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = img.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (std::size_t(in.gcount()) != raw.size())
      throw BadImageFormat("truncated P5 data");
    for (std::size_t i = 0; i < count; ++i) {
      const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      if (v > img.maxval) throw BadImageFormat("P5 sample out of range");
      img.pixels[i] = v;
    }
  }
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BadImageFormat("cannot write " + path);
  out << (binary ? "P5" : "P2") << '\n'
      << img.nx << ' ' << img.ny << '\n'
      << img.maxval << '\n';
  if (binary) {
    const int bytes = img.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw;
    raw.reserve(img.pixels.size() * bytes);
    for (int v : img.pixels) {
      if (bytes == 2) raw.push_back((unsigned char)(v >> 8));
      raw.push_back((unsigned char)(v & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              std::streamsize(raw.size()));
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      out << img.pixels[i];
      out << ((i + 1) % std::size_t(img.nx) == 0 ? '\n' : ' ');
    }
  }
}

ImagePlane load_image(const std::string& path, double scale) {
  if (!(scale >= 0.0)) throw ConfigError("teleport.scale", "must be >= 0");
  const GrayImage g = read_pgm(path);
  ImagePlane plane;
  plane.nx = g.nx;
  plane.ny = g.ny;
  plane.nt = 1;
  plane.scale = scale;
  plane.amps.resize(g.pixels.size());
  for (std::size_t i = 0; i < g.pixels.size(); ++i)
    plane.amps[i] = std::sqrt(scale * g.pixels[i] / double(g.maxval));
  return plane;
}

ImagePlane load_image_stack(const std::vector<std::string>& paths,
                            double scale) {
  if (paths.empty()) throw BadImageFormat("empty image stack");
  ImagePlane first = load_image(paths[0], scale);
  first.nt = int(paths.size());
  first.amps.reserve(std::size_t(first.nx) * first.ny * first.nt);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const ImagePlane next = load_image(paths[i], scale);
    if (next.nx != first.nx || next.ny != first.ny)
      throw BadImageFormat("image stack shapes differ");
    first.amps.insert(first.amps.end(), next.amps.begin(), next.amps.end());
  }
  return first;
}

GrayImage render_image(const ImagePlane& image, int it, int maxval) {
  GrayImage g;
  g.nx = image.nx;
  g.ny = image.ny;
  g.maxval = maxval;
  g.pixels.resize(std::size_t(image.nx) * image.ny);
  for (int jy = 0; jy < image.ny; ++jy) {
    for (int jx = 0; jx < image.nx; ++jx) {
      double v = 0.0;
      if (image.scale > 0.0)
        v = std::norm(image.at(jx, jy, it)) / image.scale;
      const long g_int = std::lround(v * maxval);
      g.pixels[std::size_t(jy) * image.nx + jx] =
          int(std::clamp<long>(g_int, 0, maxval));
    }
  }
  return g;
}

GridSpec grid_for_image(const ImagePlane& image, double delta,
                        double t_window) {
  GridSpec grid;
  grid.delta = delta;
  grid.t_window = t_window;
  grid.nx = image.nx;
  grid.ny = image.ny;
  grid.nt = image.nt;
  grid.x0 = 0.5 * delta;
  grid.y0 = 0.5 * delta;
  grid.t0 = 0.5 * t_window;
  return grid;
}

}  // namespace holotel
