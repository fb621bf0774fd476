"""Model architectures.

The classifier family works on 8-frame single-channel clips:

* ``SpatialFeatureExtractor`` (SFE): a one-level encoder-decoder applied
  per frame, preserving spatial size (1xHxW -> 1xHxW). No output
  activation.
* ``ResNet3d``: 7x7x7 stem conv with spatial stride 2, 3x3x3 maxpool
  stride 2, three residual stages (widths 64/128/256, the last two with
  stride 2), global average pool, and a 9-way linear head. Shortcuts are
  1x1x1 projection convs with BN whenever shapes change.
* ``Raw3dNet``: SFE applied to all frames with shared weights, restacked
  and fed to the 3-D ResNet; one backward pass trains both parts.
* ``UNetRestorer``: depth-3 U-Net (SFE topology, doubled widths) mapping
  a raw frame to a scene estimate, output clamped to [0, 1].

Initialization is seeded and deterministic: He-uniform conv/linear
weights, zero biases, unit BN scale, zero BN shift.
"""

import math
from dataclasses import dataclass

import torch
from torch import nn

from ..seeding import derive_seed


class ModelSpecError(ValueError):
    pass


MODEL_KINDS = ("sfe", "resnet3d", "raw3dnet", "unet_restorer")


@dataclass(frozen=True)
class ModelSpec:
    """Geometry and widths from which parameter names/shapes follow."""

    kind: str
    height: int = 240
    width: int = 320
    clip_len: int = 8
    in_channels: int = 1
    num_classes: int = 9
    sfe_width: int = 16
    resnet_widths: tuple[int, int, int] = (64, 128, 256)
    unet_width: int = 32
    unet_depth: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelSpecError(f"unknown model kind {self.kind!r}")
        if self.kind in ("sfe", "raw3dnet") and (self.height % 2 or self.width % 2):
            raise ModelSpecError(
                f"{self.kind} needs height/width divisible by 2, got {self.height}x{self.width}"
            )
        if self.kind == "unet_restorer":
            div = 2**self.unet_depth
            if self.height % div or self.width % div:
                raise ModelSpecError(
                    f"unet_restorer needs height/width divisible by {div}, got {self.height}x{self.width}"
                )
        if self.kind in ("resnet3d", "raw3dnet") and self.clip_len < 1:
            raise ModelSpecError("clip_len must be >= 1")

    def input_shape(self) -> tuple[int, ...]:
        if self.kind in ("sfe", "unet_restorer"):
            return (self.in_channels, self.height, self.width)
        return (self.in_channels, self.clip_len, self.height, self.width)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "height": self.height,
            "width": self.width,
            "clip_len": self.clip_len,
            "in_channels": self.in_channels,
            "num_classes": self.num_classes,
            "sfe_width": self.sfe_width,
            "resnet_widths": list(self.resnet_widths),
            "unet_width": self.unet_width,
            "unet_depth": self.unet_depth,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        if "resnet_widths" in d:
            d["resnet_widths"] = tuple(d["resnet_widths"])
        return cls(**d)


def conv_bn_relu(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, padding=1),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class SpatialFeatureExtractor(nn.Module):
    """Per-frame encoder-decoder; output spatial size equals input."""

    def __init__(self, width: int = 16, in_channels: int = 1):
        super().__init__()
        w = width
        self.stem = conv_bn_relu(in_channels, w)
        self.encoder1 = nn.Sequential(conv_bn_relu(w, w), conv_bn_relu(w, w))
        self.pool = nn.MaxPool2d(2)
        self.encoder2 = nn.Sequential(conv_bn_relu(w, 2 * w), conv_bn_relu(2 * w, 2 * w))
        self.upsample = nn.Sequential(nn.Upsample(scale_factor=2, mode="nearest"), conv_bn_relu(2 * w, w))
        self.decoder = nn.Sequential(conv_bn_relu(2 * w, w), conv_bn_relu(w, w))
        self.head = nn.Conv2d(w, in_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] % 2 or x.shape[-1] % 2:
            raise ModelSpecError(f"SFE input spatial size must be even, got {tuple(x.shape[-2:])}")
        s = self.stem(x)
        e1 = self.encoder1(s)
        e2 = self.encoder2(self.pool(e1))
        u = self.upsample(e2)
        d = self.decoder(torch.cat([e1, u], dim=1))
        return self.head(d)


class ResidualUnit3d(nn.Module):
    """Two 3x3x3 convs with BN; projection shortcut on shape change."""

    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv3d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm3d(out_ch)
        self.conv2 = nn.Conv3d(out_ch, out_ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm3d(out_ch)
        self.relu = nn.ReLU(inplace=True)
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Sequential(
                nn.Conv3d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm3d(out_ch),
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.bn2(self.conv2(self.relu(self.bn1(self.conv1(x)))))
        return self.relu(out + self.shortcut(x))


class ResNet3d(nn.Module):
    """Spatio-temporal residual classifier over 8-frame clips."""

    def __init__(
        self,
        widths: tuple[int, int, int] = (64, 128, 256),
        num_classes: int = 9,
        in_channels: int = 1,
        clip_len: int = 8,
    ):
        super().__init__()
        w1, w2, w3 = widths
        self.clip_len = clip_len
        self.conv1 = nn.Sequential(
            nn.Conv3d(in_channels, w1, 7, stride=(1, 2, 2), padding=3, bias=False),
            nn.BatchNorm3d(w1),
            nn.ReLU(inplace=True),
        )
        self.maxpool = nn.MaxPool3d(3, stride=2, padding=1)
        self.layer1 = ResidualUnit3d(w1, w1, stride=1)
        self.layer2 = ResidualUnit3d(w1, w2, stride=2)
        self.layer3 = ResidualUnit3d(w2, w3, stride=2)
        self.avgpool = nn.AdaptiveAvgPool3d(1)
        self.fc = nn.Linear(w3, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[2] != self.clip_len:
            raise ModelSpecError(f"expected clip length {self.clip_len}, got {x.shape[2]}")
        x = self.conv1(x)
        x = self.maxpool(x)
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        x = self.avgpool(x).flatten(1)
        return self.fc(x)


class Raw3dNet(nn.Module):
    """Shared-weight SFE on every frame, then the 3-D residual classifier."""

    def __init__(
        self,
        sfe_width: int = 16,
        resnet_widths: tuple[int, int, int] = (64, 128, 256),
        num_classes: int = 9,
        in_channels: int = 1,
        clip_len: int = 8,
    ):
        super().__init__()
        self.sfe = SpatialFeatureExtractor(sfe_width, in_channels)
        self.resnet = ResNet3d(resnet_widths, num_classes, in_channels, clip_len)

    def extract_features(self, x: torch.Tensor) -> torch.Tensor:
        """Run the per-frame extractor on a (B, C, L, H, W) clip batch."""
        b, c, length, h, w = x.shape
        frames = x.permute(0, 2, 1, 3, 4).reshape(b * length, c, h, w)
        feats = self.sfe(frames)
        return feats.reshape(b, length, c, h, w).permute(0, 2, 1, 3, 4)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.resnet(self.extract_features(x))


class UNetRestorer(nn.Module):
    """Raw frame to scene-estimate restorer; output clamped to [0, 1]."""

    def __init__(self, width: int = 32, depth: int = 3, in_channels: int = 1):
        super().__init__()
        self.depth = depth
        w = width
        self.stem = nn.Sequential(conv_bn_relu(in_channels, w), conv_bn_relu(w, w))
        downs, ups, decs = [], [], []
        ch = w
        for _ in range(depth):
            downs.append(nn.Sequential(conv_bn_relu(ch, 2 * ch), conv_bn_relu(2 * ch, 2 * ch)))
            ch *= 2
        for _ in range(depth):
            ups.append(nn.Sequential(nn.Upsample(scale_factor=2, mode="nearest"), conv_bn_relu(ch, ch // 2)))
            decs.append(nn.Sequential(conv_bn_relu(ch, ch // 2), conv_bn_relu(ch // 2, ch // 2)))
            ch //= 2
        self.downs = nn.ModuleList(downs)
        self.ups = nn.ModuleList(ups)
        self.decoders = nn.ModuleList(decs)
        self.pool = nn.MaxPool2d(2)
        self.head = nn.Conv2d(w, in_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        div = 2**self.depth
        if x.shape[-2] % div or x.shape[-1] % div:
            raise ModelSpecError(
                f"restorer input spatial size must be divisible by {div}, got {tuple(x.shape[-2:])}"
            )
        skips = []
        h = self.stem(x)
        for down in self.downs:
            skips.append(h)
            h = down(self.pool(h))
        for up, dec in zip(self.ups, self.decoders):
            h = up(h)
            h = dec(torch.cat([skips.pop(), h], dim=1))
        return self.head(h).clamp(0.0, 1.0)


def init_parameters(model: nn.Module, seed: int = 0) -> nn.Module:
    """Seeded deterministic init: He-uniform weights and biases, unit BN.

    Biases get the usual +-1/sqrt(fan_in) uniform companion rather than
    zeros; zero biases leave every all-zero ReLU receptive field exactly at
    the kink, which poisons finite-difference gradient checks.
    """
    g = torch.Generator().manual_seed(derive_seed(seed, "init"))
    for module in model.modules():
        if isinstance(module, (nn.Conv2d, nn.Conv3d, nn.Linear)):
            weight = module.weight
            fan_in = weight.shape[1] * math.prod(weight.shape[2:]) if weight.dim() > 2 else weight.shape[1]
            bound = math.sqrt(6.0 / fan_in)
            with torch.no_grad():
                weight.uniform_(-bound, bound, generator=g)
                if module.bias is not None:
                    module.bias.uniform_(-1.0 / math.sqrt(fan_in), 1.0 / math.sqrt(fan_in), generator=g)
        elif isinstance(module, (nn.BatchNorm2d, nn.BatchNorm3d)):
            with torch.no_grad():
                module.weight.fill_(1.0)
                module.bias.zero_()
    return model


def build_model(spec: ModelSpec) -> nn.Module:
    """Construct and deterministically initialize a network from its spec."""
    if spec.kind == "sfe":
        model = SpatialFeatureExtractor(spec.sfe_width, spec.in_channels)
    elif spec.kind == "resnet3d":
        model = ResNet3d(spec.resnet_widths, spec.num_classes, spec.in_channels, spec.clip_len)
    elif spec.kind == "raw3dnet":
        model = Raw3dNet(spec.sfe_width, spec.resnet_widths, spec.num_classes, spec.in_channels, spec.clip_len)
    else:
        model = UNetRestorer(spec.unet_width, spec.unet_depth, spec.in_channels)
    return init_parameters(model, spec.seed)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
