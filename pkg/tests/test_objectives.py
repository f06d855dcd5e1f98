import math

import pytest
import torch
import torch.nn.functional as F

from app.services.objectives.interfaces import MissingPrototypeError, NonFiniteLossError, PseudoLabelRangeError, ShapeMismatchError
from app.services.objectives.losses import attraction_loss, batch_consistency_loss, consistency_loss, prototype_attraction_loss, repulsion_loss, total_loss
from app.services.objectives.models import LossWeights
from app.services.prototypes.models import PrototypeBank
from app.services.reconstruction.models import IntensityImage
from app.services.representation.models import CropRect


def _unit(rows, dim, seed=0, dtype=torch.float64):
    generator = torch.Generator().manual_seed(seed)
    return F.normalize(torch.randn(rows, dim, generator=generator, dtype=dtype), dim=-1)


class TestAttraction:
    def test_orthonormal_pair(self):
        loss = attraction_loss(torch.eye(2), torch.eye(2), [0, 1], [0, 1], temperature=1.0)

        assert float(loss.value) == pytest.approx(2 * math.log(1 + math.exp(-1)), abs=1e-4)
        assert float(loss.value) == pytest.approx(0.62652, abs=1e-4)
        assert not loss.skipped

    @pytest.mark.parametrize("s_rds", [[2], []])
    def test_at_most_one_reliable_sample_is_skipped(self, s_rds):
        v = _unit(4, 8).requires_grad_()

        loss = attraction_loss(v, _unit(3, 8, seed=1), [0, 1, 2, 0], s_rds)

        assert float(loss.value) == 0.0
        assert loss.skipped
        loss.value.backward()
        assert torch.count_nonzero(v.grad) == 0

    def test_duplicate_categories_stay_in_denominator(self):
        v = torch.eye(3)[:2]
        text = torch.eye(3)

        loss = attraction_loss(v, text, [0, 0], [0, 1], temperature=1.0)

        # os dois alvos são f_0; cada termo vale -log(e^{v.f0} / (2 e^{v.f0}))
        expected = -math.log(math.e / (2 * math.e)) - math.log(1 / 2)
        assert float(loss.value) == pytest.approx(expected, abs=1e-6)

    def test_pseudo_label_out_of_range(self):
        with pytest.raises(PseudoLabelRangeError):
            attraction_loss(_unit(2, 4), _unit(2, 4), [0, 5], [0, 1])

    def test_non_negative(self):
        for seed in range(20):
            loss = attraction_loss(_unit(6, 8, seed), _unit(3, 8, seed + 100), [0, 1, 2, 0, 1, 2], [0, 2, 4, 5])
            assert float(loss.value) >= 0.0

    @pytest.mark.parametrize("seed", range(25))
    def test_gradient_matches_finite_differences(self, seed):
        v = _unit(4, 8, seed=seed).requires_grad_()
        text = _unit(3, 8, seed=seed + 1000)

        assert torch.autograd.gradcheck(lambda x: attraction_loss(x, text, [0, 1, 2, 1], [0, 1, 2, 3]).value, (v,), eps=1e-6, atol=1e-6, rtol=1e-4)


class TestRepulsion:
    def test_single_sample_is_zero(self):
        assert float(repulsion_loss(_unit(1, 8))) == 0.0

    def test_orthonormal_pair(self):
        assert float(repulsion_loss(torch.eye(2))) == pytest.approx(1.38629, abs=1e-4)

    def test_identical_pair(self):
        v = F.normalize(torch.ones(2, 4), dim=-1)

        assert float(repulsion_loss(v)) == pytest.approx(2 * math.log(1 + math.e), abs=1e-4)
        assert float(repulsion_loss(v)) == pytest.approx(2.62652, abs=1e-4)

    def test_increases_with_similarity(self):
        angles = torch.linspace(0.1, 1.5, 8, dtype=torch.float64)
        values = []
        for angle in angles:
            v = torch.stack([torch.tensor([1.0, 0.0], dtype=torch.float64), torch.stack([torch.cos(angle), torch.sin(angle)])])
            values.append(float(repulsion_loss(v)))

        assert all(a > b for a, b in zip(values, values[1:]))

    def test_category_aware_variant_drops_same_category_pairs(self):
        v = F.normalize(torch.ones(2, 4), dim=-1)

        assert float(repulsion_loss(v, pseudo=[0, 0])) == pytest.approx(0.0, abs=1e-7)
        assert float(repulsion_loss(v, pseudo=[0, 1])) == pytest.approx(float(repulsion_loss(v)))

    @pytest.mark.parametrize("seed", range(25))
    def test_gradient_matches_finite_differences(self, seed):
        v = _unit(4, 8, seed=seed).requires_grad_()

        assert torch.autograd.gradcheck(lambda x: repulsion_loss(x), (v,), eps=1e-6, atol=1e-6, rtol=1e-4)


class TestConsistency:
    def test_identical_images(self):
        image = torch.rand(8, 8)
        rect = CropRect(2, 2, 4)

        assert float(consistency_loss(image[2:6, 2:6], image, rect)) == 0.0

    def test_constant_offset(self):
        full = IntensityImage(data=torch.full((8, 8), 0.5))
        local = IntensityImage(data=torch.full((4, 4), 0.75))

        assert float(consistency_loss(local, full, CropRect(1, 3, 4))) == pytest.approx(0.25)

    def test_matches_elementwise_mean(self):
        generator = torch.Generator().manual_seed(0)
        full = torch.rand(10, 10, generator=generator, dtype=torch.float64)
        local = torch.rand(5, 5, generator=generator, dtype=torch.float64)
        rect = CropRect(3, 4, 5)

        expected = sum(abs(float(local[i, j]) - float(full[3 + i, 4 + j])) for i in range(5) for j in range(5)) / 25

        assert float(consistency_loss(local, full, rect)) == pytest.approx(expected, abs=1e-6)

    def test_size_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            consistency_loss(torch.zeros(3, 3), torch.zeros(8, 8), CropRect(0, 0, 4))

    def test_batch_version_averages_samples(self):
        full = torch.zeros(2, 1, 8, 8)
        local = torch.stack([torch.full((1, 4, 4), 0.2), torch.full((1, 4, 4), 0.6)])

        value = batch_consistency_loss(local, full, [CropRect(0, 0, 4), CropRect(4, 4, 4)])

        assert float(value) == pytest.approx(0.4)

    @pytest.mark.parametrize("seed", range(25))
    def test_gradient_matches_finite_differences(self, seed):
        generator = torch.Generator().manual_seed(seed)
        full = torch.rand(6, 6, generator=generator, dtype=torch.float64).requires_grad_()
        local = torch.rand(3, 3, generator=generator, dtype=torch.float64).requires_grad_()

        assert torch.autograd.gradcheck(lambda a, b: consistency_loss(a, b, CropRect(1, 2, 3)), (local, full), eps=1e-6, atol=1e-6, rtol=1e-4)


class TestPrototypeAttraction:
    def test_single_prototype_equal_to_text_reduces_to_attraction(self):
        text = _unit(3, 8, seed=1, dtype=torch.float32)
        bank = PrototypeBank(categories=["a", "b", "c"], prototypes={name: text[i : i + 1].clone() for i, name in enumerate("abc")}, clusters=1)
        v = _unit(5, 8, seed=2, dtype=torch.float32)
        pseudo = [0, 1, 2, 2, 1]

        expected = attraction_loss(v, text, pseudo, [0, 1, 3, 4]).value
        value = prototype_attraction_loss(v, bank, pseudo, [0, 1, 3, 4]).value

        assert float(value) == pytest.approx(float(expected), abs=1e-5)

    def test_uses_closest_prototype(self):
        bank = PrototypeBank(categories=["a", "b"], prototypes={"a": torch.eye(4)[:2], "b": torch.eye(4)[2:]}, clusters=2)
        v = torch.eye(4)[[1, 3]]

        value = prototype_attraction_loss(v, bank, [0, 1], [0, 1], temperature=1.0).value

        assert float(value) == pytest.approx(2 * math.log(1 + math.exp(-1)), abs=1e-5)

    def test_single_reliable_sample(self):
        bank = PrototypeBank(categories=["a"], prototypes={"a": torch.eye(4)[:1]}, clusters=1)

        loss = prototype_attraction_loss(_unit(3, 4), bank, [0, 0, 0], [1])

        assert loss.skipped and float(loss.value) == 0.0

    def test_missing_category(self):
        bank = PrototypeBank(categories=["a"], prototypes={"a": torch.eye(4)[:1]}, clusters=1)

        with pytest.raises(MissingPrototypeError):
            prototype_attraction_loss(_unit(2, 4), bank, [0, 1], [0, 1])

    @pytest.mark.parametrize("seed", range(25))
    def test_gradient_matches_finite_differences(self, seed):
        prototypes = _unit(6, 8, seed=seed + 2000, dtype=torch.float32)
        bank = PrototypeBank(categories=["a", "b", "c"], prototypes={"a": prototypes[0:2], "b": prototypes[2:4], "c": prototypes[4:6]}, clusters=2)
        v = _unit(4, 8, seed=seed).requires_grad_()

        assert torch.autograd.gradcheck(lambda x: prototype_attraction_loss(x, bank, [0, 1, 2, 0], [0, 1, 2, 3]).value, (v,), eps=1e-6, atol=1e-6, rtol=1e-4)


class TestTotalLoss:
    def test_default_weights(self):
        value = total_loss(torch.tensor(1.0), torch.tensor(1.0), torch.tensor(1.0), LossWeights())

        assert float(value) == pytest.approx(2.01)

    def test_zero_terms(self):
        assert float(total_loss(torch.tensor(0.0), torch.tensor(0.0), torch.tensor(0.0), LossWeights(3, 2, 1))) == 0.0

    def test_skipped_attraction(self):
        value = total_loss(torch.tensor(0.0), torch.tensor(4.0), torch.tensor(0.5), LossWeights())

        assert float(value) == pytest.approx(0.01 * 4.0 + 0.5)

    @pytest.mark.parametrize("term, position", [("attraction", 0), ("repulsion", 1), ("consistency", 2)])
    def test_non_finite_term_is_named(self, term, position):
        values = [torch.tensor(1.0)] * 3
        values[position] = torch.tensor(float("nan"))

        with pytest.raises(NonFiniteLossError) as error:
            total_loss(*values, LossWeights())

        assert error.value.term == term

    @pytest.mark.parametrize("weights", [{"lambda_att": -1.0}, {"lambda_rep": float("inf")}])
    def test_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            LossWeights(**weights)
