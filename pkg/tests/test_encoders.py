from pathlib import Path

import numpy as np
import pytest
import torch

from app.services.encoders.config import StubBackendConfig
from app.services.encoders.factories import EncoderBackendFactory, load_backend
from app.services.encoders.interfaces import BackendLoadError, ImageValidationError, PromptTemplateError, TemperatureError
from app.services.encoders.preprocessing import preprocess_images
from app.services.encoders.prompts import DEFAULT_TEMPLATE, PROMPT_SWEEP_TEMPLATES, build_prompts
from app.services.encoders.recognition import class_probabilities, encode_categories, encode_image, encode_text, predict
from app.services.encoders.stub_backend import StubBackend, split_prompt
from app.services.events.synthetic import concept_image


class TestPrompts:
    def test_builds_in_category_order(self):
        assert build_prompts(["cat", "dog"], "image of a [CLASS].") == ["image of a cat.", "image of a dog."]

    def test_template_without_token(self):
        with pytest.raises(PromptTemplateError):
            build_prompts(["cat"], "image of a cat.")

    def test_template_with_two_tokens(self):
        with pytest.raises(PromptTemplateError):
            build_prompts(["a"], "[CLASS] and [CLASS]")

    def test_empty_categories(self):
        with pytest.raises(PromptTemplateError):
            build_prompts([], DEFAULT_TEMPLATE)

    def test_sweep_templates_all_have_token(self):
        assert len(PROMPT_SWEEP_TEMPLATES) == 5
        assert all(template.count("[CLASS]") == 1 for template in PROMPT_SWEEP_TEMPLATES)

    @pytest.mark.parametrize(
        "prompt, expected",
        [("image of a cat.", ("image", "cat")), ("photo of an owl", ("photo", "owl")), ("ferry", ("", "ferry"))],
    )
    def test_split_prompt(self, prompt, expected):
        assert split_prompt(prompt) == expected


class TestStubBackend:
    def test_same_config_same_features(self, stub_backend):
        other = StubBackend(StubBackendConfig(seed=7, dim=32, size=16))
        images = torch.rand(3, 16, 16)

        torch.testing.assert_close(encode_image(stub_backend, images), encode_image(other, images))
        assert stub_backend.checksum() == other.checksum()

    def test_different_seed_different_checksum(self, stub_backend):
        assert StubBackend(StubBackendConfig(seed=8, dim=32, size=16)).checksum() != stub_backend.checksum()

    def test_features_have_unit_norm(self, stub_backend):
        image_features = encode_image(stub_backend, torch.rand(4, 1, 20, 20))
        text_features = encode_categories(stub_backend, ["anchor", "camera"])

        torch.testing.assert_close(image_features.norm(dim=-1), torch.ones(4))
        torch.testing.assert_close(text_features.norm(dim=-1), torch.ones(2))
        assert text_features.dtype == torch.float32

    def test_bare_name_matches_concept_image(self, stub_backend):
        image = torch.from_numpy(concept_image("anchor", 16)).unsqueeze(0)

        torch.testing.assert_close(encode_text(stub_backend, ["anchor"])[0], encode_image(stub_backend, image)[0].float(), atol=1e-5, rtol=1e-5)

    def test_prompt_prefix_is_a_small_perturbation(self, stub_backend):
        bare = encode_text(stub_backend, ["anchor"])[0]
        prompted = encode_text(stub_backend, ["image of a anchor."])[0]

        assert not torch.equal(bare, prompted)
        assert float(bare @ prompted) > 0.98

    def test_text_features_match_golden(self):
        backend = StubBackend(StubBackendConfig(seed=7, dim=4, size=4))
        golden = np.load(Path(__file__).parent / "data" / "stub_text_features.npy")

        features = encode_text(backend, ["anchor", "image of a camera."])

        np.testing.assert_allclose(features.numpy(), golden, atol=1e-6)

    def test_concept_image_bits_follow_name_digest(self):
        blocks = concept_image("anchor", 4)

        assert "".join("1" if value > 0.5 else "0" for value in blocks.ravel()) == "0101001111110100"

    def test_text_calls_are_logged(self, stub_backend):
        encode_categories(stub_backend, ["anchor", "camera"])

        assert stub_backend.text_call_log == [["image of a anchor.", "image of a camera."]]

    def test_image_gradient_matches_finite_differences(self, stub_backend):
        images = torch.rand(2, 1, 12, 12, dtype=torch.float64, requires_grad=True)

        assert torch.autograd.gradcheck(lambda x: encode_image(stub_backend, x), (images,), eps=1e-6, atol=1e-5)

    def test_encoding_does_not_change_frozen_tensors(self, stub_backend):
        before = stub_backend.checksum()
        images = torch.rand(2, 16, 16, requires_grad=True)

        encode_image(stub_backend, images).sum().backward()
        encode_categories(stub_backend, ["anchor"])

        assert stub_backend.checksum() == before
        assert images.grad is not None


class TestPreprocessing:
    def test_output_shape_and_normalization(self, stub_backend):
        pixels = preprocess_images(torch.ones(2, 8, 8), stub_backend.preprocess)

        assert pixels.shape == (2, 3, 16, 16)
        torch.testing.assert_close(pixels, torch.ones(2, 3, 16, 16))

    def test_non_finite_pixels(self, stub_backend):
        images = torch.zeros(1, 16, 16)
        images[0, 3, 3] = float("nan")

        with pytest.raises(ImageValidationError):
            encode_image(stub_backend, images)

    def test_wrong_channel_count(self, stub_backend):
        with pytest.raises(ImageValidationError):
            preprocess_images(torch.zeros(1, 3, 16, 16), stub_backend.preprocess)


class TestClassProbabilities:
    def test_two_category_example(self):
        probabilities = class_probabilities(torch.tensor([1.0, 0.0]), torch.eye(2), temperature=1.0)

        torch.testing.assert_close(probabilities, torch.tensor([0.7311, 0.2689]), atol=1e-4, rtol=0)

    def test_rows_sum_to_one(self, stub_backend):
        features = encode_image(stub_backend, torch.rand(5, 16, 16))
        text = encode_categories(stub_backend, ["anchor", "butterfly", "camera"])

        probabilities = class_probabilities(features, text)

        assert probabilities.shape == (5, 3)
        torch.testing.assert_close(probabilities.sum(dim=-1), torch.ones(5))

    @pytest.mark.parametrize("temperature", [0.0, -1.0])
    def test_non_positive_temperature(self, temperature):
        with pytest.raises(TemperatureError):
            class_probabilities(torch.ones(2), torch.eye(2), temperature)

    def test_argmax_does_not_depend_on_temperature(self, stub_backend):
        features = encode_image(stub_backend, torch.rand(6, 16, 16))
        text = encode_categories(stub_backend, ["anchor", "butterfly", "camera"])

        predictions = {tuple(predict(class_probabilities(features, text, temperature))) for temperature in (0.01, 0.1, 1.0, 10.0)}

        assert len(predictions) == 1


class TestPredict:
    def test_ties_take_lowest_index(self):
        assert predict(torch.tensor([0.4, 0.4, 0.2])) == 0

    def test_batch(self):
        assert predict(torch.tensor([[0.1, 0.9], [0.6, 0.4]])) == [1, 0]

    def test_empty(self):
        with pytest.raises(ValueError):
            predict(torch.tensor([]))


class TestFactory:
    def test_stub_options(self):
        backend = load_backend("stub:seed=3,dim=8,size=8,prompt_noise=0")

        assert isinstance(backend, StubBackend)
        assert backend.embed_dim == 8
        assert backend.config.seed == 3
        assert backend.config.prompt_noise == 0.0

    def test_bare_stub(self):
        assert load_backend("stub").embed_dim == StubBackendConfig().dim

    @pytest.mark.parametrize("identifier", ["", "nope:xyz", "stub:seed", "stub:dim=abc", "stub:dim=0", "/no/such/weights.pt"])
    def test_invalid_identifiers(self, identifier):
        with pytest.raises(BackendLoadError):
            EncoderBackendFactory.create(identifier)

    def test_stub_text_is_deterministic_across_instances(self):
        first = encode_categories(load_backend("stub:seed=7"), ["anchor", "ferry"])
        second = encode_categories(load_backend("stub:seed=7"), ["anchor", "ferry"])

        np.testing.assert_array_equal(first.numpy(), second.numpy())
