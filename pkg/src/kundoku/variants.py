"""Traditional (kyūjitai) to modern Japanese (shinjitai) glyph forms.

Classical sources use traditional forms (溫, 爲) while Japanese renderings use
the modern ones (温, 為).  The table covers common pairs only; unknown glyphs
pass through unchanged.
"""

_PAIRS = (
    "溫温 爲為 學学 國国 來来 與与 從従 會会 實実 將将 歸帰 聲声 舊旧 樂楽 禮礼 亂乱 戰戦 經経 說説"
    " 氣気 德徳 傳伝 變変 兩両 數数 當当 對対 稱称 萬万 處処 觀観 龍竜 廣広 發発 圖図 餘余 賣売"
    " 讀読 黨党 擧挙 舉挙 齊斉 應応 惡悪 壽寿 縣県 號号 權権 歲歳 險険 驗験 參参 獨独 寶宝 盡尽"
    " 晝昼 淺浅 澤沢 濟済 燈灯 爭争 狀状 獻献 畫画 疊畳 盜盗 緣縁 續続 總総 聽聴 肅粛 臺台 舍舎"
    " 莊荘 蟲虫 裝装 覺覚 譽誉 豐豊 辯弁 辨弁 瓣弁 辭辞 邊辺 鄕郷 醫医 鐵鉄 關関 隨随 靜静 顯顕"
    " 體体 鬪闘 黃黄 默黙 齒歯 卽即 勞労 勵励 區区 卷巻 單単 嚴厳 團団 壞壊 壯壮 奧奥 寢寝 專専"
    " 屆届 屬属 峽峡 巖巌 帶帯 廢廃 彈弾 徑径 恆恒 惠恵 戲戯 拂払 拜拝 攝摂 敎教 斷断 晉晋 曉暁"
    " 條条 櫻桜 殘残 每毎 淨浄 滿満 爐炉 犧犠 獸獣 產産 眞真 碎砕 祕秘 禪禅 稻稲 穗穂 竊窃 絲糸"
    " 繪絵 繼継 缺欠 脫脱 藝芸 藥薬 虛虚 衞衛 觸触 譯訳 讓譲 貳弐 贊賛 輕軽 轉転 遲遅 遙遥 鄰隣"
    " 釋釈 錢銭 鎭鎮 隱隠 雙双 雜雑 鷄鶏 雞鶏 靈霊 顏顔 飮飲 驛駅 髮髪 麥麦 齡齢 乘乗 佛仏 假仮"
    " 價価 儉倹 兒児 劍剣 勸勧 勳勲 圍囲 圓円 壓圧 嶽岳 巢巣 彌弥 惱悩 懷懐 戀恋 拔抜 擇択 擔担"
    " 據拠 擴拡 攜携 敍叙 曆暦 曾曽 榮栄 樣様 檢検 歐欧 步歩 歷歴 沒没 渴渇 溪渓 滯滞 潛潜 瀧滝"
    " 營営 狹狭 甁瓶 硏研 禱祷 竝並 粹粋 絕絶 緖緒 縱縦 繩縄 纖繊 罐缶 腦脳 臟臓 艷艶 莖茎 藏蔵"
    " 蠶蚕 螢蛍 覽覧 謠謡 讚讃 豫予 賴頼 踐践 醉酔 錄録 鑄鋳 陷陥 隸隷 靑青 飜翻 騷騒 驅駆 黑黒"
    " 點点 齋斎 稅税 悅悦 銳鋭 閱閲 淸清"
)

SHINJITAI: dict[str, str] = {pair[0]: pair[1] for pair in _PAIRS.split()}


def modern_form(glyph: str) -> str:
    return SHINJITAI.get(glyph, glyph)


def fold(text: str) -> str:
    """Map every traditional form in ``text`` to its modern form."""
    return "".join(SHINJITAI.get(ch, ch) for ch in text)
