from unittest import TestCase

import os
import tempfile

import numpy as np

from pufentropy import (ClassMap, SamplerConfig, Distribution, WeightVector, canonical_key, chow, FormatError, IntegrityError, VersionError, IncompatibleMaps,
                        dumps, loads, save, load, merge_files, run, run_shard, run_poissonized, census_map)

EXAMPLE = """#pufclassmap v1
n=3
dist=gaussian
seed=7
shards=8
rounds=10
rejected=0
4 0 0 6
2 2 2 4
"""

HEADER = "#pufclassmap v1\nn=3\ndist=gaussian\nseed=7\nshards=8\nrounds={rounds}\nrejected=0\n"


class TestText(TestCase):

    def test_dumps(self):
        cmap = ClassMap(n=3, distribution="gaussian", counts={(2, 2, 2): 4, (4, 0, 0): 6}, seed=7, shards=8)
        self.assertEqual(dumps(cmap), EXAMPLE)
        self.assertEqual(loads(EXAMPLE), cmap)

    def test_optional_fields(self):
        cmap = run_poissonized(SamplerConfig(n=4, rounds=300, seed=2, shards=2))
        text = dumps(cmap)
        self.assertIn(f"\nrounds={cmap.rounds}\npoisson_n=300\nrejected=0\n", text)
        self.assertEqual(loads(text), cmap)
        census = census_map(3)
        text = dumps(census)
        self.assertIn("\nexact=true\n", text)
        self.assertIn("\n4 0 0 6\n2 2 2 8\n", text)
        self.assertEqual(loads(text), census)

    def test_empty(self):
        cmap = ClassMap(n=5, distribution="laplace", seed=1)
        text = dumps(cmap)
        self.assertTrue(text.endswith("rejected=0\n"))
        self.assertEqual(loads(text), cmap)

    def test_tolerated_input(self):
        # blank lines in the body and a missing rejected field
        text = EXAMPLE.replace("rejected=0\n", "").replace("2 2 2 4", "\n2 2 2 4\n")
        self.assertEqual(loads(text).counts(), {(4, 0, 0): 6, (2, 2, 2): 4})

    def test_random_round_trip(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            # keys of real classes, so the covered PUFs never exceed the published counts
            keys = {canonical_key(chow(WeightVector(rng.standard_normal(n)))).to_tuple()
                    for _ in range(int(rng.integers(0, 6)))}
            counts = {key: int(rng.integers(1, 2 ** 62)) for key in keys}
            poisson_n = int(rng.integers(0, 10 ** 9)) if rng.random() < 0.5 else None
            cmap = ClassMap(n=n, distribution=str(rng.choice([str(d) for d in Distribution])), counts=counts,
                            seed=int(rng.integers(0, 2 ** 64, dtype=np.uint64)), shards=int(rng.integers(1, 65)),
                            poisson_n=poisson_n, rejected=int(rng.integers(0, 100)))
            self.assertEqual(loads(dumps(cmap)), cmap)

    def test_format_errors(self):
        bad = [
            "",
            "#classmap v1\n",
            "#pufclassmap\n",
            EXAMPLE.replace("n=3", "n=three"),
            EXAMPLE.replace("n=3", "n=0"),
            EXAMPLE.replace("n=3", "n=30"),
            EXAMPLE.replace("seed=7", f"seed={2 ** 64}"),
            EXAMPLE.replace("shards=8", "shards=0"),
            EXAMPLE.replace("seed=7", "seed=-7"),
            EXAMPLE.replace("seed=7\n", ""),
            EXAMPLE.replace("seed=7", "seed=7\nseed=8"),
            EXAMPLE.replace("seed=7", "colour=red"),
            EXAMPLE.replace("dist=gaussian", "dist="),
            EXAMPLE.replace("rejected=0", "rejected=0\nexact=yes"),
            EXAMPLE.replace("4 0 0 6", "4 0 6"),
            EXAMPLE.replace("4 0 0 6", "4 0 0 six"),
        ]
        for text in bad:
            with self.assertRaises(FormatError, msg=text):
                loads(text)

    def test_version(self):
        with self.assertRaises(VersionError):
            loads(EXAMPLE.replace("v1", "v2"))

    def test_integrity_errors(self):
        bad = [
            # not canonical
            HEADER.format(rounds=6) + "0 4 0 6\n",
            # odd entries
            HEADER.format(rounds=6) + "3 1 0 6\n",
            # not sorted
            HEADER.format(rounds=10) + "2 2 2 4\n4 0 0 6\n",
            # duplicate
            HEADER.format(rounds=10) + "4 0 0 6\n4 0 0 4\n",
            # zero count
            HEADER.format(rounds=6) + "4 0 0 6\n2 2 2 0\n",
            # count beyond 64 bits
            HEADER.format(rounds=2 ** 64) + f"4 0 0 {2 ** 64}\n",
            # rounds mismatch
            HEADER.format(rounds=11) + "4 0 0 6\n2 2 2 4\n",
            # more PUFs than exist
            HEADER.format(rounds=3) + "4 0 0 1\n2 2 2 1\n2 2 0 1\n",
            # census count that is not an orbit size
            HEADER.format(rounds=10).replace("rejected=0\n", "rejected=0\nexact=true\n") + "4 0 0 6\n2 2 2 4\n",
        ]
        for text in bad:
            with self.assertRaises(IntegrityError, msg=text):
                loads(text)

    def test_dumps_rejects_large_counts(self):
        cmap = ClassMap(n=2, distribution="gaussian", counts={(2, 0): 2 ** 64})
        with self.assertRaises(IntegrityError):
            dumps(cmap)


class TestFiles(TestCase):

    def test_save_load(self):
        cmap = run(SamplerConfig(n=5, rounds=2000, seed=3, shards=2), workers=1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "n5.map")
            save(cmap, path)
            self.assertEqual(load(path), cmap)
            with open(path, "rb") as f:
                self.assertNotIn(b"\r\n", f.read())
            with open(path, "w") as f:
                f.write(EXAMPLE.replace("rounds=10", "rounds=12"))
            with self.assertRaises(IntegrityError) as cm:
                load(path)
            self.assertIn(path, str(cm.exception))
            with self.assertRaises(OSError):
                load(os.path.join(tmp, "missing.map"))

    def test_merge_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = os.path.join(tmp, "a.map")
            out = os.path.join(tmp, "out.map")
            with open(a, "w") as f:
                f.write(EXAMPLE)
            merged = merge_files([a, a], out)
            self.assertEqual(merged.counts(), {(4, 0, 0): 12, (2, 2, 2): 8})
            self.assertEqual(load(out), merged)
            self.assertIn("rounds=20\n", open(out).read())

    def test_merge_shard_files(self):
        config = SamplerConfig(n=4, rounds=3000, seed=11, shards=8)
        with tempfile.TemporaryDirectory() as tmp:
            single = os.path.join(tmp, "single.map")
            save(run(config, workers=1), single)
            shard_files = []
            for k in range(8):
                path = os.path.join(tmp, f"shard{k}.map")
                save(run_shard(config, k), path)
                shard_files.append(path)
            merged = os.path.join(tmp, "merged.map")
            merge_files(shard_files, merged)
            with open(single, "rb") as f1, open(merged, "rb") as f2:
                self.assertEqual(f1.read(), f2.read())

    def test_merge_incompatible(self):
        with tempfile.TemporaryDirectory() as tmp:
            a, b = os.path.join(tmp, "a.map"), os.path.join(tmp, "b.map")
            save(ClassMap(n=3, distribution="gaussian"), a)
            save(ClassMap(n=3, distribution="uniform"), b)
            with self.assertRaises(IncompatibleMaps):
                merge_files([a, b], os.path.join(tmp, "out.map"))
