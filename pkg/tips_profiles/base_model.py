import json
from typing import Any, Dict, Type, TypeVar

from .pydantic_compat import (
    BaseModel,
    ConfigDict,
    PydanticVersion,
    get_model_config,
    model_dump_compat,
    model_validate_compat,
)

ModelT = TypeVar("ModelT", bound="BaseTipsModel")


class BaseTipsModel(BaseModel):
    """
    Immutable base for every domain type of the pipeline.

    Instances are frozen once validated so they can be shared read-only
    across concurrent task analyses.
    """

    # --------------------------------------------------------------------------
    # Pydantic configuration
    # --------------------------------------------------------------------------
    if PydanticVersion >= 2:
        model_config = ConfigDict(**get_model_config())
    else:
        class Config:
            frozen = True
            allow_population_by_field_name = True

    # --------------------------------------------------------------------------
    # Plain-data conversion
    # --------------------------------------------------------------------------
    def to_dict(self, **kwargs) -> Dict[str, Any]:
        """Return the model as plain Python data (enums kept as ``str`` subclasses)."""
        return model_dump_compat(self, **kwargs)

    def to_json(self) -> str:
        """Deterministic JSON: sorted keys, two-space indent."""
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls: Type[ModelT], data: Any) -> ModelT:
        return model_validate_compat(cls, data)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=str)
