from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    OUTPUT_DIR: str = "out"
    MAX_WORKERS: int = 1

    FLOAT_DIGITS: int = 17

    model_config = SettingsConfigDict(env_prefix="WMGAME_", env_file=".env", extra="ignore")

settings = Settings()
