from functools import lru_cache
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# 실행 환경 설정 (실험 파라미터는 INI 파일에서 읽는다)
class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # 로깅 설정
    log_level: str = "INFO"

    # 병렬 실행 설정 (RDSEED_THREADS)
    rdseed_threads: int = Field(default=1, ge=1)

    # 궤적 저장 메모리 상한
    memory_cap_gib: float = Field(default=4.0, gt=0)

    # 출력 설정
    output_dir: str = "runs"

    @property
    def memory_cap_bytes(self) -> int:
        return int(self.memory_cap_gib * 1024 ** 3)


@lru_cache()
def get_settings() -> Settings:
    return Settings()
