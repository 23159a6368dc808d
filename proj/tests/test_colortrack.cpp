#include <doctest.h>

#include <algorithm>
#include <random>

#include "linefollow/colortrack.hpp"
#include "linefollow/reference.hpp"
#include "linefollow/sim.hpp"
#include "oracles.hpp"

using namespace linefollow;

namespace {

PixelBuffer square_on_white(int w, int h, Rect sq, Rgb color) {
  std::vector<std::uint8_t> d(static_cast<std::size_t>(w) * h * 3, 255);
  for (int y = sq.y; y < sq.y + sq.h; ++y)
    for (int x = sq.x; x < sq.x + sq.w; ++x) {
      auto* p = &d[(static_cast<std::size_t>(y) * w + x) * 3];
      p[0] = color.r;
      p[1] = color.g;
      p[2] = color.b;
    }
  return PixelBuffer(w, h, PixelFormat::RGB8, std::move(d));
}

std::vector<RegionReport> track_mask(const std::vector<std::uint8_t>& mask, int w, int h, TrackerConfig cfg) {
  StreamTracker t(w, {1}, cfg);
  for (int y = 0; y < h; ++y) t.push_row(std::span(mask).subspan(static_cast<std::size_t>(y) * w, w));
  return t.finish();
}

ColorSignature random_signature(std::mt19937& rng, int q, bool allow_wrap) {
  std::uniform_int_distribution<int> lv(0, q - 1);
  ColorSignature s;
  s.q_levels = q;
  s.lower_hue = lv(rng);
  s.upper_hue = lv(rng);
  if (!allow_wrap && s.lower_hue > s.upper_hue) std::swap(s.lower_hue, s.upper_hue);
  s.lower_sat = lv(rng);
  s.upper_sat = lv(rng);
  if (s.lower_sat > s.upper_sat) std::swap(s.lower_sat, s.upper_sat);
  return s;
}

}  // namespace

TEST_CASE("quantize maps hue and saturation to levels") {
  CHECK(quantize({0, 0, 0}, 10) == HsLevel{0, 0});
  CHECK(quantize({359.9, 1.0, 1}, 10) == HsLevel{9, 9});
  CHECK(quantize({36, 0.85, 1}, 10) == HsLevel{1, 8});
  CHECK_THROWS_AS(quantize({0, 0, 0}, 1), ContractError);
}

TEST_CASE("class matrix decomposition of the worked example") {
  ColorSignature sig{1, 1, 9, 7, 9, 10};
  const auto m = build_class_matrix(sig);
  CHECK(m.hclass == std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  CHECK(m.sclass == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 1, 1, 1});
  CHECK(membership(m, 1, 8));
  CHECK_FALSE(membership(m, 0, 8));
  CHECK_THROWS_AS(membership(m, 10, 0), ContractError);

  const auto single = build_class_matrix({1, 3, 3, 3, 3, 10});
  int cells = 0;
  for (int h = 0; h < 10; ++h)
    for (int s = 0; s < 10; ++s) cells += membership(single, h, s);
  CHECK(cells == 1);
}

TEST_CASE("class matrix membership equals the four-comparison test") {
  std::mt19937 rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_signature(rng, 10, true);
    const auto m = build_class_matrix(s);
    for (int h = 0; h < 10; ++h) {
      for (int sat = 0; sat < 10; ++sat) {
        const bool sat_ok = sat >= s.lower_sat && sat <= s.upper_sat;
        const bool direct = s.wraps() ? ((h >= s.lower_hue && h <= 9) || (h >= 0 && h <= s.upper_hue)) && sat_ok
                                      : h >= s.lower_hue && h <= s.upper_hue && sat_ok;
        CHECK(membership(m, h, sat) == direct);
      }
    }
  }
}

TEST_CASE("signature validation") {
  CHECK_THROWS_AS(build_class_matrix({0, 0, 1, 0, 1, 10}), ContractError);
  CHECK_THROWS_AS(build_class_matrix({8, 0, 1, 0, 1, 10}), ContractError);
  CHECK_THROWS_AS(build_class_matrix({1, 0, 10, 0, 1, 10}), ContractError);
  CHECK_THROWS_AS(build_class_matrix({1, 0, 1, 5, 1, 10}), ContractError);
}

TEST_CASE("learn_signature takes the saturated hue/sat extent") {
  const auto red = PixelBuffer::filled(4, 4, PixelFormat::RGB8, 0);
  std::vector<std::uint8_t> d;
  for (int i = 0; i < 16; ++i) d.insert(d.end(), {255, 0, 0});
  const auto sig = learn_signature(PixelBuffer(4, 4, PixelFormat::RGB8, d), {0, 0, 4, 4}, 10, 3);
  CHECK(sig.id == 3);
  CHECK(sig.lower_hue == 0);
  CHECK(sig.upper_hue == 0);
  CHECK(sig.lower_sat == 9);
  CHECK(sig.upper_sat == 9);

  // Hue 80 deg -> level 2, hue 160 deg -> level 4; plus white pixels that
  // carry no hue.
  const auto h2 = hsv_to_rgb({80, 1, 1});
  const auto h4 = hsv_to_rgb({160, 1, 1});
  const PixelBuffer two(3, 1, PixelFormat::RGB8, {h2.r, h2.g, h2.b, h4.r, h4.g, h4.b, 255, 255, 255});
  const auto s2 = learn_signature(two, {0, 0, 3, 1});
  CHECK(s2.lower_hue == 2);
  CHECK(s2.upper_hue == 4);
  CHECK_FALSE(s2.wraps());

  CHECK_THROWS_WITH_AS(learn_signature(red, {0, 0, 4, 4}), doctest::Contains("unsaturated"), ContractError);
  CHECK_THROWS_AS(learn_signature(red, {2, 2, 4, 4}), ContractError);
  CHECK_THROWS_AS(learn_signature(red, {0, 0, 0, 1}), ContractError);
}

TEST_CASE("learn_signature wraps red hues across zero") {
  const auto a = hsv_to_rgb({2, 0.9, 0.9});
  const auto b = hsv_to_rgb({355, 0.9, 0.9});
  const PixelBuffer img(2, 1, PixelFormat::RGB8, {a.r, a.g, a.b, b.r, b.g, b.b});
  const auto sig = learn_signature(img, {0, 0, 2, 1});
  CHECK(sig.wraps());
  CHECK(sig.lower_hue == 9);
  CHECK(sig.upper_hue == 0);
  const auto m = build_class_matrix(sig);
  CHECK(m.hclass == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("learned signature re-detects a rendered red stripe") {
  TrackSpec track;
  track.waypoints = {{0, 0}, {1, 0}};
  track.line_color = {200, 30, 30};
  track.noise_stddev = 6;
  CameraModel cam;
  cam.axis_frac = 0.5;
  const auto frame = render_view(track, {0, 0, 0}, cam, 3);
  const Rect stripe{180, 0, 40, 300};  // inside the 50 px stripe
  const auto sig = learn_signature(frame, stripe);
  const auto m = build_class_matrix(sig);
  int hits = 0;
  for (int y = stripe.y; y < stripe.y + stripe.h; ++y)
    for (int x = stripe.x; x < stripe.x + stripe.w; ++x) {
      const auto c = frame.rgb(x, y);
      const auto lv = quantize(rgb_to_hsv(c.r, c.g, c.b), sig.q_levels);
      hits += m.contains(lv.h, lv.s);
    }
  CHECK(hits >= 0.99 * stripe.w * stripe.h);
}

TEST_CASE("track_frame on simple scenes") {
  const std::vector sigs{signature_for_color({255, 0, 0})};
  CHECK(track_frame(PixelBuffer::filled(50, 40, PixelFormat::RGB8, 255), sigs).empty());

  const auto img = square_on_white(64, 64, {20, 30, 10, 10}, {255, 0, 0});
  const auto regions = track_frame(img, sigs);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].signature == 1);
  CHECK(regions[0].x_center == 24);  // floor(24.5)
  CHECK(regions[0].y_center == 34);
  CHECK(regions[0].width == 10);
  CHECK(regions[0].height == 10);
  CHECK(regions[0].pixel_count == 100);
  CHECK(format_region(regions[0]) == "1 24 34 10 10 100");
}

TEST_CASE("track_frame keeps signatures apart and orders biggest first") {
  auto img = square_on_white(80, 40, {2, 2, 10, 10}, {255, 0, 0});
  std::vector<std::uint8_t> d(img.data().begin(), img.data().end());
  // Adjacent green block touching the red one; must stay a separate region.
  for (int y = 2; y < 20; ++y)
    for (int x = 12; x < 30; ++x) {
      auto* p = &d[(static_cast<std::size_t>(y) * 80 + x) * 3];
      p[0] = 0;
      p[1] = 255;
      p[2] = 0;
    }
  const PixelBuffer scene(80, 40, PixelFormat::RGB8, d);
  const std::vector sigs{signature_for_color({255, 0, 0}, 1), signature_for_color({0, 255, 0}, 2)};
  const auto regions = track_frame(scene, sigs);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].signature == 2);
  CHECK(regions[0].pixel_count == 18 * 18);
  CHECK(regions[1].signature == 1);
  CHECK(regions[1].pixel_count == 100);
}

TEST_CASE("streaming tracker equals two-pass labelling") {
  std::mt19937 rng(77);
  TrackerConfig off{1, 1, -1};
  for (int trial = 0; trial < 200; ++trial) {
    const int w = std::uniform_int_distribution<int>(1, 64)(rng);
    const int h = std::uniform_int_distribution<int>(1, 64)(rng);
    const auto mask = oracle::random_mask(rng, w, h);
    auto got = track_mask(mask, w, h, off);
    const auto want = oracle::two_pass_ccl(mask, w, h);
    REQUIRE(got.size() == want.size());
    std::sort(got.begin(), got.end(), [](const RegionReport& a, const RegionReport& b) {
      return std::tie(a.top, a.left, a.pixel_count) < std::tie(b.top, b.left, b.pixel_count);
    });
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].left == want[i].x_min);
      CHECK(got[i].top == want[i].y_min);
      CHECK(got[i].width == want[i].x_max - want[i].x_min + 1);
      CHECK(got[i].height == want[i].y_max - want[i].y_min + 1);
      CHECK(got[i].pixel_count == want[i].count);
      CHECK(got[i].x_center == want[i].x_center);
      CHECK(got[i].y_center == want[i].y_center);
    }
  }
}

TEST_CASE("U shapes merge into one region") {
  const int w = 7, h = 4;
  const std::vector<std::uint8_t> mask = {
      1, 0, 0, 1, 0, 0, 1,  //
      1, 0, 0, 1, 0, 0, 1,  //
      1, 1, 1, 1, 0, 0, 1,  //
      0, 0, 0, 1, 1, 1, 1,  //
  };
  const auto r = track_mask(mask, w, h, {1, 1, -1});
  REQUIRE(r.size() == 1);
  CHECK(r[0].pixel_count == 15);
  CHECK(r[0].width == 7);
  CHECK(r[0].height == 4);
}

TEST_CASE("noise filter drops short runs and is monotone") {
  const std::vector<std::uint8_t> row = {1, 0, 1, 1, 0, 1, 1, 1, 0};
  CHECK(track_mask(row, 9, 1, {1, 1, -1}).size() == 3);
  CHECK(track_mask(row, 9, 1, {2, 1, -1}).size() == 2);
  CHECK(track_mask(row, 9, 1, {3, 1, -1}).size() == 1);
  CHECK(track_mask(row, 9, 1, {4, 1, -1}).empty());

  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mask = oracle::random_mask(rng, 48, 32);
    std::uint64_t last = ~0ull;
    for (int run = 1; run <= 8; ++run) {
      std::uint64_t total = 0;
      for (const auto& r : track_mask(mask, 48, 32, {run, 1, -1})) total += r.pixel_count;
      CHECK(total <= last);
      last = total;
    }
  }
}

TEST_CASE("min_region_pixels, max_regions and ordering") {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mask = oracle::random_mask(rng, 40, 40);
    const auto all = track_mask(mask, 40, 40, {1, 1, -1});
    for (std::size_t i = 1; i < all.size(); ++i) {
      const auto& a = all[i - 1];
      const auto& b = all[i];
      CHECK(a.pixel_count >= b.pixel_count);
      if (a.pixel_count == b.pixel_count) CHECK(std::tie(a.top, a.left) <= std::tie(b.top, b.left));
    }
    const auto big = track_mask(mask, 40, 40, {1, 5, -1});
    CHECK(big.size() == std::count_if(all.begin(), all.end(), [](auto& r) { return r.pixel_count >= 5; }));
    const auto capped = track_mask(mask, 40, 40, {1, 1, 3});
    CHECK(capped.size() == std::min<std::size_t>(3, all.size()));
    for (std::size_t i = 0; i < capped.size(); ++i) CHECK(capped[i] == all[i]);
  }
}

TEST_CASE("tracker state stays bounded by the row, not the frame") {
  // Feed a tall striped frame row by row without ever materialising it.
  const int w = 64;
  StreamTracker t(w, {1}, {1, 1, -1});
  std::vector<std::uint8_t> row(w);
  std::size_t peak = 0;
  for (int y = 0; y < 5000; ++y) {
    for (int x = 0; x < w; ++x) row[x] = ((x / 3 + y / 7) % 2);
    t.push_row(row);
    peak = std::max(peak, t.live_region_slots());
  }
  CHECK(t.rows_consumed() == 5000);
  CHECK(peak <= static_cast<std::size_t>(w));
  CHECK_FALSE(t.finish().empty());
  CHECK_THROWS_AS(t.push_row(row), ContractError);
}

TEST_CASE("tracker contract errors") {
  CHECK_THROWS_AS(StreamTracker(0, {1}), ContractError);
  CHECK_THROWS_AS(StreamTracker(4, {}), ContractError);
  CHECK_THROWS_AS(StreamTracker(4, {1}, {0, 1, -1}), ContractError);
  StreamTracker t(4, {1});
  std::vector<std::uint8_t> short_row(3);
  CHECK_THROWS_AS(t.push_row(short_row), ContractError);
  const std::vector sigs{ColorSignature{1, 0, 0, 9, 9, 10}, ColorSignature{2, 0, 0, 9, 9, 8}};
  CHECK_THROWS_AS(track_frame(PixelBuffer::filled(2, 2, PixelFormat::RGB8), sigs), ContractError);
}

TEST_CASE("signature file round trip and errors") {
  const auto sigs = parse_signatures("# comment\n1 0 0 8 9 10\n\n2 9 0 5 9 10  # wraps\n");
  REQUIRE(sigs.size() == 2);
  CHECK(sigs[1].wraps());
  CHECK(format_signature(sigs[0]) == "1 0 0 8 9 10");
  CHECK(parse_signatures(format_signature(sigs[1]) + "\n")[0] == sigs[1]);
  CHECK_THROWS_WITH_AS(parse_signatures("1 0 0 8\n"), doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_AS(parse_signatures("1 0 0 8 9 10 11\n"), ParseError);
  CHECK_THROWS_AS(parse_signatures("9 0 0 8 9 10\n"), ParseError);
  CHECK_THROWS_AS(parse_signatures("1 0 12 8 9 10\n"), ParseError);
}

TEST_CASE("membership mask matches the serial four-comparison reference") {
  std::mt19937 rng(19);
  std::vector<std::uint8_t> d(37 * 23 * 3);
  for (auto& v : d) v = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng));
  const PixelBuffer img(37, 23, PixelFormat::RGB8, d);
  for (int i = 0; i < 30; ++i) {
    const std::vector sigs{random_signature(rng, 10, true), random_signature(rng, 10, false)};
    CHECK(membership_mask(img, sigs) == reference::membership_mask(img, sigs));
  }
}
