import numpy as np
import pytest

from conftest import fast_train_config, tiny_config
from relaudio.errors import CorruptFileError, VersionError
from relaudio.modelio import (file_checksum, load_convnet, load_expert,
                              load_expert_directory, load_relnet, save_convnet,
                              save_expert, save_relnet)
from relaudio.relevance import ExpertSet
from relaudio.relnet import train_convnet, train_relnet


@pytest.fixture(scope="module")
def expert_file(tmp_path_factory, tiny_experts):
    path = tmp_path_factory.mktemp("models") / "class0.expert"
    checksum = save_expert(tiny_experts[0], path)
    return path, checksum, tiny_experts[0]


class TestExpertFiles:
    def test_roundtrip_bit_identical_forward(self, tiny_bags, expert_file):
        path, _, original = expert_file
        loaded = load_expert(path)
        assert loaded.class_id == original.class_id
        assert loaded.class_name == original.class_name
        assert loaded.metadata.best_epoch == original.metadata.best_epoch
        for bag in tiny_bags[:4]:
            a = original.positive_prob(bag.features)
            b = loaded.positive_prob(bag.features)
            np.testing.assert_array_equal(a, b)

    def test_checksum_matches_trailer(self, expert_file):
        path, checksum, _ = expert_file
        assert file_checksum(path) == checksum

    def test_truncated_file_is_corrupt(self, tmp_path, tiny_experts):
        path = tmp_path / "t.expert"
        save_expert(tiny_experts[0], path)
        path.write_bytes(path.read_bytes()[:-40])
        with pytest.raises(CorruptFileError):
            load_expert(path)

    def test_flipped_byte_fails_checksum(self, tmp_path, tiny_experts):
        path = tmp_path / "f.expert"
        save_expert(tiny_experts[0], path)
        raw = bytearray(path.read_bytes())
        raw[60] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptFileError):
            load_expert(path)

    def test_newer_version_names_both(self, tmp_path, tiny_experts):
        import hashlib
        path = tmp_path / "v.expert"
        save_expert(tiny_experts[0], path)
        raw = bytearray(path.read_bytes())[:-32]
        raw[4] = 2
        body = bytes(raw)
        path.write_bytes(body + hashlib.sha256(body).digest())
        with pytest.raises(VersionError, match=r"version 2.*version 1"):
            load_expert(path)


class TestRelnetFiles:
    def test_roundtrip_with_expert_references(self, tmp_path, tiny_bags, tiny_experts):
        experts = ExpertSet(tiny_experts)
        model = train_relnet(tiny_bags, experts, fast_train_config(epochs=4))
        checksums = {}
        for e in tiny_experts:
            checksums[e.class_id] = save_expert(e, tmp_path / f"{e.class_name}.expert")
        save_relnet(model, tmp_path / "model.relnet", checksums)
        pool = load_expert_directory(tmp_path)
        loaded = load_relnet(tmp_path / "model.relnet", pool)
        for bag in tiny_bags[:4]:
            np.testing.assert_array_equal(loaded.forward(bag.features).distribution,
                                          model.forward(bag.features).distribution)

    def test_missing_expert_reference(self, tmp_path, tiny_bags, tiny_experts):
        experts = ExpertSet(tiny_experts)
        model = train_relnet(tiny_bags, experts, fast_train_config(epochs=2))
        checksums = {e.class_id: save_expert(e, tmp_path / f"{e.class_name}.expert")
                     for e in tiny_experts}
        save_relnet(model, tmp_path / "model.relnet", checksums)
        (tmp_path / "class0.expert").unlink()
        pool = load_expert_directory(tmp_path)
        with pytest.raises(ValueError, match="class0"):
            load_relnet(tmp_path / "model.relnet", pool)


class TestConvnetFiles:
    def test_roundtrip(self, tmp_path, tiny_bags):
        model = train_convnet(tiny_bags, ["class0", "class1"], tiny_config(seed=6),
                              fast_train_config(epochs=4))
        save_convnet(model, tmp_path / "baseline.convnet")
        loaded = load_convnet(tmp_path / "baseline.convnet")
        assert loaded.class_names == ["class0", "class1"]
        for bag in tiny_bags[:4]:
            np.testing.assert_array_equal(loaded.forward(bag.features).distribution,
                                          model.forward(bag.features).distribution)
