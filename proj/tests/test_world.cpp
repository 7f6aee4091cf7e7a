#include <doctest/doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hio/world.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace
{

hio::WorldSpec small_spec(int n, int lo, int hi, double skew = 0.0)
{
	hio::WorldSpec s;
	s.n_objects = n;
	s.cooc = Eigen::MatrixXd::Zero(n, n);
	s.scene_size_min = lo;
	s.scene_size_max = hi;
	s.popularity_skew = skew;
	s.seed = 3;
	return s;
}

int count_objects(const hio::Tokens & t, const hio::Vocab & v)
{
	return static_cast<int>(std::count_if(t.begin(), t.end(), [&](int x) { return v.is_object(x); }));
}

} // namespace

TEST_CASE("build_world is deterministic")
{
	hio::WorldSpec s = small_spec(12, 2, 4, 1.0);
	s.cooc = hio::clustered_cooc(12, 3, 2.0, 0.3, 5);
	const hio::World a = hio::build_world(s);
	const hio::World b = hio::build_world(s);
	CHECK(a.frequency() == b.frequency());
	CHECK(a.base_weights() == b.base_weights());
	CHECK(std::abs(a.base_weights().sum() - 1.0) < 1e-12);

	hio::Rng ra = a.make_rng("x"), rb = b.make_rng("x");
	for (int i = 0; i < 50; ++i)
		CHECK(hio::sample_scene(a, ra, i) == hio::sample_scene(b, rb, i));
}

TEST_CASE("clustered_cooc is a valid co-occurrence matrix")
{
	const Eigen::MatrixXd c = hio::clustered_cooc(10, 2, 1.5, 0.2, 1);
	CHECK(c == c.transpose());
	CHECK(c.diagonal().isZero());
	CHECK((c.array() >= 0).all());
	CHECK(c(0, 1) >= 1.5);
	CHECK(c(0, 2) < 0.2);
	CHECK(code_of([] { hio::clustered_cooc(4, 0, 1, 0, 1); }) == "invalid-spec");
}

TEST_CASE("validate_spec rejects bad specs")
{
	auto bad = [](auto mutate) {
		hio::WorldSpec s = small_spec(4, 2, 3);
		mutate(s);
		return code_of([&] { hio::validate_spec(s); });
	};
	CHECK(bad([](hio::WorldSpec &) {}) == "");
	CHECK(bad([](hio::WorldSpec & s) { s.cooc(0, 1) = s.cooc(1, 0) = -0.1; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.cooc(0, 1) = 1.0; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.cooc(2, 2) = 1.0; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.cooc.resize(3, 3); }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.scene_size_min = 1; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.scene_size_max = 5; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.scene_size_min = 3, s.scene_size_max = 2; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.bias_rate = 1.0; }) == "invalid-spec");
	CHECK(bad([](hio::WorldSpec & s) { s.popularity_skew = -1; }) == "invalid-spec");
}

TEST_CASE("scene sizes respect the configured range")
{
	const hio::World two = hio::build_world(small_spec(4, 2, 2));
	const hio::World three = hio::build_world(small_spec(4, 3, 3));
	const hio::World wide = hio::build_world(small_spec(8, 2, 5));
	hio::Rng rng(1);
	std::set<std::size_t> seen;
	for (int i = 0; i < 500; ++i)
	{
		CHECK(hio::sample_scene(two, rng).objects.size() == 2);
		CHECK(hio::sample_scene(three, rng).objects.size() == 3);
		const hio::Scene s = hio::sample_scene(wide, rng, i);
		seen.insert(s.objects.size());
		CHECK(std::is_sorted(s.objects.begin(), s.objects.end()));
		CHECK(std::adjacent_find(s.objects.begin(), s.objects.end()) == s.objects.end());
		CHECK(s.id == static_cast<std::uint64_t>(i));
	}
	CHECK(seen == std::set<std::size_t>{2, 3, 4, 5});
}

TEST_CASE("scene distribution matches exact enumeration")
{
	// Zero co-occurrence: objects enter independently of each other.
	hio::WorldSpec s = small_spec(5, 2, 3, 0.8);
	const auto uncorrelated = oracle::scene_distribution(s);
	// And a correlated world.
	hio::WorldSpec t = s;
	t.cooc = hio::clustered_cooc(5, 2, 2.0, 0.5, 9);
	const auto correlated = oracle::scene_distribution(t);

	for (const auto & [spec, dist] : {std::pair{s, uncorrelated}, std::pair{t, correlated}})
	{
		const hio::World world = hio::build_world(spec);
		hio::Rng rng(77);
		const int n = 20000;
		std::map<std::vector<int>, int> counts;
		for (int i = 0; i < n; ++i)
			++counts[hio::sample_scene(world, rng).objects];
		double total = 0.0;
		for (const auto & [key, p] : dist)
		{
			total += p;
			const double sigma = std::sqrt(p * (1 - p) / n);
			CHECK(std::abs(counts[key] / static_cast<double>(n) - p) <= 4 * sigma + 1e-12);
		}
		CHECK(std::abs(total - 1.0) < 1e-12);
		for (const auto & kv : counts)
			CHECK(dist.count(kv.first) == 1);
	}
}

TEST_CASE("high co-occurrence raises the conditional probability")
{
	hio::WorldSpec s = small_spec(10, 2, 3);
	s.cooc(2, 7) = s.cooc(7, 2) = 3.0;
	const hio::World world = hio::build_world(s);
	hio::Rng rng(4);
	int with_a = 0, with_ab = 0, with_b = 0, without_a_b = 0;
	const int n = 20000;
	for (int i = 0; i < n; ++i)
	{
		const hio::Scene sc = hio::sample_scene(world, rng);
		const bool a = sc.contains(2), b = sc.contains(7);
		with_a += a;
		with_b += b;
		with_ab += a && b;
		without_a_b += !a && b;
	}
	const double p_b = with_b / static_cast<double>(n);
	const double p_b_given_a = with_ab / static_cast<double>(with_a);
	const double p_b_given_not_a = without_a_b / static_cast<double>(n - with_a);
	CHECK(p_b_given_a > p_b);
	CHECK(p_b_given_a > 2 * p_b_given_not_a);
}

TEST_CASE("world frequency estimates the marginal")
{
	hio::WorldSpec s = small_spec(5, 2, 3, 0.8);
	s.cooc = hio::clustered_cooc(5, 2, 1.0, 0.2, 2);
	const hio::World world = hio::build_world(s);
	Eigen::VectorXd exact = Eigen::VectorXd::Zero(5);
	for (const auto & [key, p] : oracle::scene_distribution(s))
		for (int v : key)
			exact(v) += p;
	// 20000 draws; sigma <= 0.0036.
	CHECK((world.frequency() - exact).lpNorm<Eigen::Infinity>() < 0.015);
}

TEST_CASE("reference_caption mentions exactly the scene")
{
	const hio::Vocab v{10};
	hio::Rng rng(2);
	const hio::Scene one{1, {7}};
	CHECK(hio::reference_caption(one, v, rng).tokens == hio::Tokens{7, 10});

	const hio::Scene pair{4, {2, 5}};
	std::set<hio::Tokens> orders;
	for (int i = 0; i < 1000; ++i)
	{
		const hio::CaptionExample c = hio::reference_caption(pair, v, rng);
		CHECK(c.scene_id == 4);
		CHECK(hio::is_well_formed_caption(c.tokens, v));
		orders.insert(c.tokens);
	}
	CHECK(orders == std::set<hio::Tokens>{{2, 5, 10}, {5, 2, 10}});
}

TEST_CASE("inject_bias at rate zero is the identity")
{
	hio::WorldSpec s = small_spec(6, 2, 3);
	s.bias_rate = 0.0;
	const hio::World world = hio::build_world(s);
	hio::Rng rng(8);
	for (int i = 0; i < 200; ++i)
	{
		const hio::Scene sc = hio::sample_scene(world, rng, i);
		const hio::CaptionExample ref = hio::reference_caption(sc, world.vocab(), rng);
		CHECK(hio::inject_bias(ref, sc, world, rng) == ref);
	}
}

TEST_CASE("inject_bias adds one absent object at the configured rate")
{
	hio::WorldSpec s = small_spec(8, 2, 3);
	s.cooc = hio::clustered_cooc(8, 2, 2.0, 0.1, 3);
	s.bias_rate = 0.3;
	const hio::World world = hio::build_world(s);
	hio::Rng rng(12);
	int biased = 0;
	const int n = 10000;
	for (int i = 0; i < n; ++i)
	{
		const hio::Scene sc = hio::sample_scene(world, rng, i);
		const hio::CaptionExample ref = hio::reference_caption(sc, world.vocab(), rng);
		const hio::CaptionExample out = hio::inject_bias(ref, sc, world, rng);
		CHECK(hio::is_well_formed_caption(out.tokens, world.vocab()));
		CHECK(out.tokens.back() == world.vocab().period());
		if (out == ref)
			continue;
		++biased;
		REQUIRE(out.tokens.size() == ref.tokens.size() + 1);
		int absent = 0;
		for (int t : out.tokens)
			absent += world.vocab().is_object(t) && !sc.contains(t);
		CHECK(absent == 1);
		CHECK(count_objects(out.tokens, world.vocab()) == static_cast<int>(sc.objects.size()) + 1);
	}
	CHECK(std::abs(biased / static_cast<double>(n) - 0.3) < 0.02);
}

TEST_CASE("inject_bias falls back to uniform choice when affinity is flat")
{
	hio::WorldSpec s = small_spec(5, 2, 2);
	s.bias_rate = 0.999999;
	const hio::World world = hio::build_world(s);
	hio::Rng rng(6);
	const hio::Scene sc{0, {0, 1}};
	std::set<int> inserted;
	for (int i = 0; i < 300; ++i)
	{
		const hio::CaptionExample out = hio::inject_bias({0, {0, 1, 5}}, sc, world, rng);
		REQUIRE(out.tokens.size() == 4);
		for (int t : out.tokens)
			if (t >= 2 && t < 5)
				inserted.insert(t);
	}
	CHECK(inserted == std::set<int>{2, 3, 4});
}

TEST_CASE("corrupt_scene drop probability")
{
	hio::Rng rng(10);
	const hio::Scene three{5, {1, 4, 6}};
	for (int i = 0; i < 100; ++i)
		CHECK(hio::corrupt_scene(three, 0.0, rng) == three);
	for (int i = 0; i < 100; ++i)
	{
		const hio::Scene out = hio::corrupt_scene(three, 1.0, rng);
		CHECK(out.id == 5);
		REQUIRE(out.objects.size() == 1);
		CHECK(three.contains(out.objects[0]));
	}

	hio::Scene ten{0, {}};
	for (int v = 0; v < 10; ++v)
		ten.objects.push_back(v);
	double kept = 0.0;
	const int n = 2000;
	for (int i = 0; i < n; ++i)
	{
		const hio::Scene out = hio::corrupt_scene(ten, 0.5, rng);
		CHECK(std::includes(ten.objects.begin(), ten.objects.end(), out.objects.begin(), out.objects.end()));
		kept += out.objects.size();
	}
	CHECK(std::abs(1.0 - kept / (10.0 * n) - 0.5) < 0.02);

	CHECK(code_of([&] { hio::corrupt_scene(three, 1.5, rng); }) == "invalid-argument");
	CHECK(code_of([&] { hio::corrupt_scene(three, -0.1, rng); }) == "invalid-argument");
}

TEST_CASE("gen_corpus")
{
	hio::WorldSpec s = small_spec(12, 2, 4, 1.0);
	s.cooc = hio::clustered_cooc(12, 2, 2.0, 0.3, 4);
	s.bias_rate = 0.3;
	const hio::World world = hio::build_world(s);

	hio::Rng r0(1);
	CHECK(code_of([&] { hio::gen_corpus(world, 0, r0); }) == "invalid-argument");

	hio::Rng r1 = world.make_rng("train"), r2 = world.make_rng("train");
	const auto a = hio::gen_corpus(world, 2000, r1);
	const auto b = hio::gen_corpus(world, 2000, r2);
	CHECK(a == b);
	REQUIRE(a.size() == 2000);

	int biased = 0;
	for (std::size_t i = 0; i < a.size(); ++i)
	{
		const auto & e = a[i];
		CHECK(e.scene.id == i);
		CHECK(e.reference.scene_id == i);
		CHECK(e.biased.scene_id == i);
		hio::Tokens objs(e.reference.tokens.begin(), e.reference.tokens.end() - 1);
		std::sort(objs.begin(), objs.end());
		CHECK(objs == e.scene.objects);
		biased += !(e.biased == e.reference);
	}
	// 600 expected, binomial sigma about 20.5.
	CHECK(std::abs(biased - 600) < 80);
}

TEST_CASE("gen_probes on a hand built world")
{
	hio::WorldSpec s = small_spec(4, 2, 2, 1.0);
	s.cooc(0, 3) = s.cooc(3, 0) = 2.0;
	const hio::World world = hio::build_world(s);
	const std::vector<hio::Scene> scenes{{9, {0, 1}}};
	hio::Rng rng(3);

	const auto popular = hio::gen_probes(world, scenes, hio::ProbeMode::popular, 1, rng);
	REQUIRE(popular.size() == 2);
	CHECK(popular[0].present);
	CHECK(scenes[0].contains(popular[0].object_id));
	CHECK(!popular[1].present);
	const int top_absent = world.frequency()(2) >= world.frequency()(3) ? 2 : 3;
	CHECK(popular[1].object_id == top_absent);

	const auto adversarial = hio::gen_probes(world, scenes, hio::ProbeMode::adversarial, 1, rng);
	REQUIRE(adversarial.size() == 2);
	CHECK(adversarial[1].object_id == 3);
	CHECK(!adversarial[1].present);

	const auto random = hio::gen_probes(world, scenes, hio::ProbeMode::random, 3, rng);
	CHECK(random.size() == 4);
	for (const auto & q : random)
	{
		CHECK(q.scene_id == 9);
		CHECK(q.mode == hio::ProbeMode::random);
		CHECK(q.present == scenes[0].contains(q.object_id));
	}

	const std::vector<hio::Scene> full{{1, {0, 1, 2, 3}}};
	CHECK(code_of([&] { hio::gen_probes(world, full, hio::ProbeMode::random, 1, rng); }) == "no-negatives");
	CHECK(code_of([&] { hio::gen_probes(world, scenes, hio::ProbeMode::random, 0, rng); }) == "invalid-argument");
	CHECK(code_of([] { hio::probe_mode_from_string("pop"); }) == "invalid-argument");
	for (auto m : {hio::ProbeMode::random, hio::ProbeMode::popular, hio::ProbeMode::adversarial})
		CHECK(hio::probe_mode_from_string(hio::to_string(m)) == m);
}

TEST_CASE("probe labels are always correct")
{
	hio::WorldSpec s = small_spec(10, 2, 4, 0.7);
	s.cooc = hio::clustered_cooc(10, 2, 1.5, 0.3, 8);
	const hio::World world = hio::build_world(s);
	hio::Rng rng(14);
	std::vector<hio::Scene> scenes;
	for (int i = 0; i < 300; ++i)
		scenes.push_back(hio::sample_scene(world, rng, i));
	for (auto m : {hio::ProbeMode::random, hio::ProbeMode::popular, hio::ProbeMode::adversarial})
	{
		const auto probes = hio::gen_probes(world, scenes, m, 3, rng);
		std::size_t pos = 0, neg = 0;
		for (const auto & q : probes)
		{
			const hio::Scene & sc = scenes[q.scene_id];
			CHECK(q.present == sc.contains(q.object_id));
			(q.present ? pos : neg) += 1;
		}
		CHECK(neg == 3 * scenes.size());
		CHECK(pos >= 2 * scenes.size());
	}
}
