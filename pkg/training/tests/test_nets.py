import numpy as np
import pytest
import torch

from colorgrid_training import ActorCritic, ShapeError, flat_dim
from colorgrid_training.nets import conv_output_side


class TestShapes:
    def test_flatten_dimension_at_default_size(self):
        assert conv_output_side(32) == 26
        assert flat_dim(32, 32) == 43264

    def test_head_output_dimensions(self):
        model = ActorCritic(32, 32)
        grid = torch.zeros(2, 5, 32, 32)
        goal = torch.zeros(2, 3)
        logits, value, aux, hidden = model(grid, goal)
        assert logits.shape == (2, 4)
        assert value.shape == (2,)
        assert aux.shape == (2, 3)
        assert hidden is None

    def test_first_linear_consumes_flat_plus_goal(self):
        model = ActorCritic(32, 32, goal_concat="early")
        assert model.fc1.in_features == 43264 + 3
        assert model.fc1.out_features == 192

    def test_late_concat_moves_goal_to_second_layer(self):
        model = ActorCritic(32, 32, goal_concat="late")
        assert model.fc1.in_features == 43264
        assert model.fc2.in_features == 192 + 3

    def test_tiny_grid_rejected(self):
        with pytest.raises(ShapeError):
            ActorCritic(6, 6)

    def test_wrong_input_shape_raises(self):
        model = ActorCritic(8, 8)
        with pytest.raises(ShapeError):
            model(torch.zeros(1, 5, 12, 12), torch.zeros(1, 3))

    def test_recurrent_cell_dimensions(self):
        torch.manual_seed(1)
        model = ActorCritic(8, 8, recurrent=True)
        assert model.lstm.input_size == 192
        assert model.lstm.hidden_size == 192
        grid = torch.rand(3, 5, 8, 8)
        goal = torch.zeros(3, 3)
        _, _, _, hidden = model(grid, goal)
        assert hidden[0].shape == (3, 192) and hidden[1].shape == (3, 192)
        # hidden state actually carries information forward
        _, _, _, hidden2 = model(grid, goal, hidden)
        assert not torch.equal(hidden[0], hidden2[0])

    def test_goal_vector_changes_output(self):
        torch.manual_seed(0)
        model = ActorCritic(8, 8)
        grid = torch.rand(1, 5, 8, 8)
        a, _, _, _ = model(grid, torch.tensor([[1.0, 0.0, 0.0]]))
        b, _, _, _ = model(grid, torch.tensor([[0.0, 0.0, 1.0]]))
        assert not torch.allclose(a, b)


class TestAuxGradientFiniteDifference:
    def test_matches_autograd_within_tolerance(self):
        torch.manual_seed(7)
        model = ActorCritic(8, 8).double()
        grid = torch.rand(4, 5, 8, 8, dtype=torch.float64)
        goal = torch.zeros(4, 3, dtype=torch.float64)
        goal[torch.arange(4), torch.tensor([0, 1, 2, 0])] = 1.0
        labels = torch.tensor([0, 1, 2, 0])

        def aux_loss() -> torch.Tensor:
            _, _, aux_logits, _ = model(grid, goal)
            return torch.nn.functional.cross_entropy(aux_logits, labels)

        loss = aux_loss()
        # shared conv weights sit upstream of every head
        shared = model.conv[0].weight
        (grad,) = torch.autograd.grad(loss, shared)

        rng = np.random.default_rng(0)
        eps = 1e-6
        flat_idx = rng.choice(shared.numel(), size=24, replace=False)
        with torch.no_grad():
            for idx in flat_idx:
                unravel = np.unravel_index(idx, shared.shape)
                original = shared[unravel].item()
                shared[unravel] = original + eps
                up = aux_loss().item()
                shared[unravel] = original - eps
                down = aux_loss().item()
                shared[unravel] = original
                fd = (up - down) / (2 * eps)
                ag = grad[unravel].item()
                rel = abs(fd - ag) / max(abs(fd), abs(ag), 1e-10)
                assert rel < 1e-4, f"index {unravel}: fd={fd:.3e} autograd={ag:.3e} rel={rel:.2e}"
