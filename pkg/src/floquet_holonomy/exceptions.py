"""Иерархия пользовательских исключений пакета floquet_holonomy.

Каждый класс несёт ``exit_code`` — код выхода CLI для этой категории ошибок.
"""


class FloquetHolonomyError(Exception):
    """Базовое исключение для всех ошибок floquet_holonomy."""

    exit_code: int = 1


class ConfigurationError(FloquetHolonomyError):
    """Отсутствующая или некорректная конфигурация."""

    exit_code = 2


class ScenarioValidationError(ConfigurationError):
    """Документ сценария не прошёл валидацию."""


class InputValidationError(FloquetHolonomyError):
    """Входные данные операции нарушают её предусловия."""

    exit_code = 2


class NotHermitianError(InputValidationError):
    """Оператор не эрмитов в пределах допуска."""

    def __init__(self, asymmetry: float, bound: float) -> None:
        self.asymmetry = asymmetry
        self.bound = bound
        super().__init__(
            f"Оператор не эрмитов: ‖A − A†‖_F = {asymmetry:.3e} > {bound:.3e}"
        )


class NotUnitaryError(InputValidationError):
    """Оператор не унитарен в пределах допуска."""

    def __init__(self, defect: float, bound: float) -> None:
        self.defect = defect
        self.bound = bound
        super().__init__(f"Оператор не унитарен: ‖U†U − 1‖_F = {defect:.3e} > {bound:.3e}")


class DimensionMismatchError(InputValidationError):
    """Размерности операндов не совпадают."""

    def __init__(self, left: tuple[int, ...], right: tuple[int, ...]) -> None:
        self.left = left
        self.right = right
        super().__init__(f"Несовпадение размерностей: {left} и {right}")


class SingularMatrixError(InputValidationError):
    """Матрица вырождена (полярное разложение не определено)."""

    def __init__(self, smallest_singular_value: float) -> None:
        self.smallest_singular_value = smallest_singular_value
        super().__init__(
            f"Матрица вырождена: минимальное сингулярное число {smallest_singular_value:.3e}"
        )


class BranchBoundaryError(FloquetHolonomyError):
    """Собственная фаза U(T) на границе главной ветви логарифма (резонанс)."""

    exit_code = 3

    def __init__(self, eigenphase: float, resonance_tol: float) -> None:
        self.eigenphase = eigenphase
        self.resonance_tol = resonance_tol
        super().__init__(
            f"Собственная фаза {eigenphase:.12f} ближе {resonance_tol:.1e} к ±π: "
            "M не восстанавливается из U(T) однозначно (резонансный период)"
        )


class LevelCrossingError(FloquetHolonomyError):
    """Пересечение уровней: изменилась кратность спектра или поле обратилось в ноль."""

    exit_code = 4


class NumericalToleranceError(FloquetHolonomyError):
    """Численная невязка превысила допуск."""

    exit_code = 1

    def __init__(self, message: str, *, residual: float, bound: float) -> None:
        self.residual = residual
        self.bound = bound
        super().__init__(f"{message}: невязка {residual:.3e} > {bound:.3e}")


class GridTooCoarseError(NumericalToleranceError):
    """Сетка по времени слишком грубая для устойчивой оценки."""


class UnitarityDriftError(NumericalToleranceError):
    """Унитарность решения нарушена сильнее допуска."""


class ToleranceCheckFailed(NumericalToleranceError):
    """Одна из проверок сценария не уложилась в заданный допуск."""


class PeriodicityError(InputValidationError):
    """Модель не T-периодична: H(0) ≠ H(T) или R(0) ≠ R(T)."""

    def __init__(self, mismatch: float, bound: float) -> None:
        self.mismatch = mismatch
        self.bound = bound
        super().__init__(f"Нарушена периодичность: ‖X(0) − X(T)‖ = {mismatch:.3e} > {bound:.3e}")
